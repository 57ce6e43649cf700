#include "lcpo/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lcpo {

CategoricalBatch CategoricalBatch::from_logits(const Matrix2D& logits) {
  CategoricalBatch dist;
  dist.log_probs = logits;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = std::log((logits.row(i).array() - m).exp().sum()) + m;
    dist.log_probs.row(i) = logits.row(i).array() - lse;
  }
  dist.probs = dist.log_probs.array().exp();
  return dist;
}

CategoricalBatch CategoricalBatch::from_probs(const Matrix2D& probs) {
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (probs.row(i).minCoeff() < 0.0 || std::abs(probs.row(i).sum() - 1.0) > 1e-8)
      throw std::invalid_argument("CategoricalBatch: rows must be distributions");
  }
  CategoricalBatch dist;
  dist.probs = probs;
  dist.log_probs = probs.array().max(std::numeric_limits<double>::min()).log();
  return dist;
}

Eigen::VectorXd log_prob(const CategoricalBatch& dist, std::span<const int> actions) {
  if (static_cast<Eigen::Index>(actions.size()) != dist.rows())
    throw std::invalid_argument("log_prob: one action per row required");
  Eigen::VectorXd out(dist.rows());
  for (Eigen::Index i = 0; i < dist.rows(); ++i) {
    const int a = actions[static_cast<size_t>(i)];
    if (a < 0 || a >= dist.cols()) throw std::out_of_range("log_prob: action index out of range");
    out(i) = dist.log_probs(i, a);
  }
  return out;
}

Eigen::VectorXd entropy_per_row(const CategoricalBatch& dist) {
  return -(dist.probs.array() * dist.log_probs.array()).rowwise().sum();
}

double entropy(const CategoricalBatch& dist) { return entropy_per_row(dist).mean(); }

double kl(const CategoricalBatch& p, const CategoricalBatch& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw std::invalid_argument("kl: shape mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double pi = p.probs(i, j);
      if (pi <= 0.0) continue;
      if (q.probs(i, j) <= 0.0) throw std::domain_error("kl: q has zero mass where p > 0");
      total += pi * (p.log_probs(i, j) - q.log_probs(i, j));
    }
  }
  return total / static_cast<double>(p.rows());
}

double cross_entropy(const CategoricalBatch& p_target, const CategoricalBatch& q) {
  if (p_target.rows() != q.rows() || p_target.cols() != q.cols())
    throw std::invalid_argument("cross_entropy: shape mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p_target.rows(); ++i) {
    for (Eigen::Index j = 0; j < p_target.cols(); ++j) {
      const double pi = p_target.probs(i, j);
      if (pi <= 0.0) continue;
      if (q.probs(i, j) <= 0.0)
        throw std::domain_error("cross_entropy: q has zero mass where target > 0");
      total -= pi * q.log_probs(i, j);
    }
  }
  return total / static_cast<double>(p_target.rows());
}

Matrix2D fisher_action(const CategoricalBatch& dist, const Matrix2D& v_out) {
  if (v_out.rows() != dist.rows() || v_out.cols() != dist.cols())
    throw std::invalid_argument("fisher_action: shape mismatch");
  Matrix2D out = dist.probs.cwiseProduct(v_out);
  const Eigen::VectorXd dots = out.rowwise().sum();  // p.v per row
  out -= dist.probs.cwiseProduct(dots.replicate(1, dist.cols()));
  return out;
}

Matrix2D mean_entropy_logit_grad(const CategoricalBatch& dist) {
  const Eigen::VectorXd h = entropy_per_row(dist);
  Matrix2D out = dist.log_probs + h.replicate(1, dist.cols());
  out = -dist.probs.cwiseProduct(out) / static_cast<double>(dist.rows());
  return out;
}

Matrix2D KlAnchorFn::grad(const Matrix2D& logits) const {
  const CategoricalBatch q = CategoricalBatch::from_logits(logits);
  if (q.rows() != target_.rows() || q.cols() != target_.cols())
    throw std::invalid_argument("KlAnchorFn: shape mismatch");
  return (q.probs - target_) / static_cast<double>(logits.rows());
}

Matrix2D KlAnchorFn::hess_action(const Matrix2D& logits, const Matrix2D& tangent) const {
  const CategoricalBatch q = CategoricalBatch::from_logits(logits);
  return fisher_action(q, tangent) / static_cast<double>(logits.rows());
}

}  // namespace lcpo
