#pragma once

#include <Eigen/Dense>

namespace lcpo {

// Row-major so batch rows are contiguous; all math in this repo is float64
// (the CG and KKT solves are too ill-conditioned for float32).
using Matrix2D = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Flat vector of all trainable parameters, ordered (weight, bias) per layer.
using ParamVector = Eigen::VectorXd;

inline bool all_finite(const Matrix2D& m) { return m.allFinite(); }
inline bool all_finite(const ParamVector& v) { return v.allFinite(); }

}  // namespace lcpo
