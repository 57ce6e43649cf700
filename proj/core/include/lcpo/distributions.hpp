#pragma once

#include <span>
#include <vector>

#include "lcpo/tensor/matrix.hpp"
#include "lcpo/tensor/mlp.hpp"

namespace lcpo {

// Batch of categorical distributions, one per row. Logs are derived from
// logits with max-subtraction, never from probabilities, so tiny masses stay
// finite in log space.
struct CategoricalBatch {
  Matrix2D probs;
  Matrix2D log_probs;

  static CategoricalBatch from_logits(const Matrix2D& logits);
  static CategoricalBatch from_probs(const Matrix2D& probs);

  Eigen::Index rows() const { return probs.rows(); }
  Eigen::Index cols() const { return probs.cols(); }
};

// log pi(a|s) per row.
Eigen::VectorXd log_prob(const CategoricalBatch& dist, std::span<const int> actions);

Eigen::VectorXd entropy_per_row(const CategoricalBatch& dist);

// Mean over rows of -sum p ln p.
double entropy(const CategoricalBatch& dist);

// Mean over rows of sum p ln(p/q). Throws if q has zero mass where p > 0.
double kl(const CategoricalBatch& p, const CategoricalBatch& q);

// Mean over rows of -sum p_target ln q. Gradient flows through q only.
double cross_entropy(const CategoricalBatch& p_target, const CategoricalBatch& q);

// Per-row categorical Fisher in logit space: F v = diag(p) v - p (p.v).
// Composed with a backward pass this is the KL Hessian-vector product at
// the expansion point.
Matrix2D fisher_action(const CategoricalBatch& dist, const Matrix2D& v_out);

// Gradient of mean entropy w.r.t. logits: row i = -p (ln p + H_i) / N.
Matrix2D mean_entropy_logit_grad(const CategoricalBatch& dist);

// Scalar fn z -> mean_rows KL(target, softmax(z)) for Hessian-vector
// products through an actor net. The curvature of cross-entropy w.r.t.
// logits is the Fisher of softmax(z) regardless of the target row.
class KlAnchorFn : public LogitScalarFn {
 public:
  explicit KlAnchorFn(Matrix2D target_probs) : target_(std::move(target_probs)) {}

  Matrix2D grad(const Matrix2D& logits) const override;
  Matrix2D hess_action(const Matrix2D& logits, const Matrix2D& tangent) const override;

 private:
  Matrix2D target_;
};

}  // namespace lcpo
