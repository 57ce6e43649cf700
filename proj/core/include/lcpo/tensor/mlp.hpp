#pragma once

#include <cstdint>
#include <vector>

#include "lcpo/tensor/matrix.hpp"
#include "lcpo/util/rng.hpp"

namespace lcpo {

enum class OutputActivation : uint32_t { Identity = 0, Softmax = 1 };

// Hidden layers are always ReLU; Softmax heads are reserved for actors.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 0;
  OutputActivation output_activation = OutputActivation::Identity;

  void validate() const;
  int param_count() const;
  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  bool operator==(const MlpSpec&) const = default;
};

// Dense MLP with exact reverse-mode gradients and a forward-mode tangent
// pass. Forward caches activations; backward/tangent calls check the cache
// against both the batch and the parameter version and reject stale state.
class Mlp {
 public:
  Mlp(MlpSpec spec, Rng& init_rng);

  const MlpSpec& spec() const { return spec_; }
  int param_count() const { return spec_.param_count(); }

  // Post-head output: softmax rows for Softmax heads, raw logits otherwise.
  Matrix2D forward(const Matrix2D& batch);

  // Pre-head output (== forward() for Identity heads). Cached like forward.
  Matrix2D forward_logits(const Matrix2D& batch);

  // dLoss/dtheta for an upstream gradient w.r.t. the post-head output.
  ParamVector backward(const Matrix2D& batch, const Matrix2D& upstream) const;

  // dLoss/dtheta for an upstream gradient w.r.t. the pre-head logits.
  ParamVector backward_from_logits(const Matrix2D& batch, const Matrix2D& upstream) const;

  // Jacobian-vector product: directional derivative of the logits along a
  // parameter direction v, evaluated at the cached forward point.
  Matrix2D tangent_logits(const Matrix2D& batch, const ParamVector& v) const;

  ParamVector get_params() const;
  void set_params(const ParamVector& params);

 private:
  void check_cache(const Matrix2D& batch) const;

  MlpSpec spec_;
  std::vector<Matrix2D> weights_;           // weights_[l] is (in x out)
  std::vector<Eigen::RowVectorXd> biases_;  // biases_[l] is (1 x out)
  uint64_t params_version_ = 0;

  struct Cache {
    bool valid = false;
    uint64_t params_version = 0;
    Matrix2D input;
    std::vector<Matrix2D> post;  // post-ReLU activation per hidden layer
    Matrix2D logits;
    Matrix2D output;
  };
  mutable Cache cache_;
};

// Scalar function of the network's pre-head logits, with enough structure to
// form Hessian-vector products without materializing any matrix: grad() is
// the reverse-pass seed and hess_action() the output-space curvature action.
class LogitScalarFn {
 public:
  virtual ~LogitScalarFn() = default;
  virtual Matrix2D grad(const Matrix2D& logits) const = 0;
  virtual Matrix2D hess_action(const Matrix2D& logits, const Matrix2D& tangent) const = 0;
};

// Hessian-vector product of theta -> scalar_fn(logits_theta(batch)) at the
// current parameters, computed forward-over-reverse. Exact whenever the
// output-space gradient vanishes at the evaluation point (the KL use case)
// or the logits are linear in theta; Gauss-Newton otherwise.
ParamVector gradient_vector_product(Mlp& net, const Matrix2D& batch,
                                    const LogitScalarFn& scalar_fn, const ParamVector& v);

}  // namespace lcpo
