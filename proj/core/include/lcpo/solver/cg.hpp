#pragma once

#include <functional>

#include "lcpo/tensor/matrix.hpp"

namespace lcpo {

using ApplyFn = std::function<ParamVector(const ParamVector&)>;

struct CgResult {
  ParamVector x;
  double residual_norm = 0.0;
  int iters_used = 0;
};

// Solves (A + damping I) x = v for symmetric PSD A given only the matrix
// action. Stops early when the residual drops below 1e-10 * |v|.
CgResult conjugate_gradient(const ApplyFn& apply_A, const ParamVector& v, int iters,
                            double damping);

}  // namespace lcpo
