#include "lcpo/ood/samplers.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <stdexcept>

namespace lcpo {
namespace {

// Uniform draw of min(minibatch, |candidates|) without replacement via
// partial Fisher-Yates, then gather.
AnchorBatch gather(const ExperienceStore& store, std::vector<int64_t> candidates, int minibatch,
                   Rng& rng) {
  AnchorBatch batch;
  const auto take = std::min<int64_t>(minibatch, static_cast<int64_t>(candidates.size()));
  for (int64_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<int64_t>(
                           rng.uniform_int(static_cast<uint64_t>(candidates.size() - i)));
    std::swap(candidates[static_cast<size_t>(i)], candidates[static_cast<size_t>(j)]);
  }
  candidates.resize(static_cast<size_t>(take));
  batch.indices = std::move(candidates);
  batch.obs.resize(take, store.obs_dim());
  batch.frozen_probs.resize(take, store.n_actions());
  for (int64_t i = 0; i < take; ++i) {
    batch.obs.row(i) = store.obs().row(batch.indices[static_cast<size_t>(i)]);
    batch.frozen_probs.row(i) = store.probs().row(batch.indices[static_cast<size_t>(i)]);
  }
  return batch;
}

}  // namespace

void OodSpec::validate() const {
  if (minibatch <= 0) throw std::invalid_argument("OodSpec: minibatch must be positive");
  if (covariance_ridge <= 0.0) throw std::invalid_argument("OodSpec: ridge must be positive");
  if (l2_threshold < 0.0) throw std::invalid_argument("OodSpec: l2_threshold must be >= 0");
}

AnchorBatch sample_anchors_l2(const ExperienceStore& store, const Matrix2D& recent_features,
                              const OodSpec& spec, Rng& rng) {
  spec.validate();
  if (store.size() == 0) return {};
  if (recent_features.cols() != store.feat_dim())
    throw std::invalid_argument("sample_anchors_l2: feature dims mismatch");
  const Eigen::RowVectorXd mean = recent_features.colwise().mean();
  const double thr2 = spec.l2_threshold * spec.l2_threshold;
  const Eigen::VectorXd d2 = (store.features().rowwise() - mean).rowwise().squaredNorm();
  std::vector<int64_t> candidates;
  for (int64_t i = 0; i < store.size(); ++i)
    if (d2(i) > thr2) candidates.push_back(i);
  return gather(store, std::move(candidates), spec.minibatch, rng);
}

AnchorBatch sample_anchors_mahalanobis(const ExperienceStore& store,
                                       const Matrix2D& recent_features, const OodSpec& spec,
                                       Rng& rng) {
  spec.validate();
  if (recent_features.rows() < 2)
    throw std::invalid_argument("sample_anchors_mahalanobis: need >= 2 recent rows");
  if (store.size() == 0) return {};
  if (recent_features.cols() != store.feat_dim())
    throw std::invalid_argument("sample_anchors_mahalanobis: feature dims mismatch");

  const Eigen::Index d = recent_features.cols();
  const Eigen::RowVectorXd mean = recent_features.colwise().mean();
  const Matrix2D centered = recent_features.rowwise() - mean;
  Eigen::MatrixXd cov;
  if (recent_features.rows() < d) {
    // Too few samples for a full fit; keep the marginal variances only.
    cov = (centered.array().square().colwise().mean()).matrix().asDiagonal();
  } else {
    cov = centered.transpose() * centered / static_cast<double>(recent_features.rows());
  }
  cov.diagonal().array() += spec.covariance_ridge;
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sample_anchors_mahalanobis: covariance not PD after ridge");

  // scores_i = -(w_i - mu)' Sigma^-1 (w_i - mu) / 2, scanned in blocks so a
  // multi-million-record store never materializes a second full copy.
  std::vector<int64_t> candidates;
  constexpr int64_t kBlock = 65536;
  for (int64_t start = 0; start < store.size(); start += kBlock) {
    const int64_t n = std::min(kBlock, store.size() - start);
    const Matrix2D diff = store.features().middleRows(start, n).rowwise() - mean;
    const Eigen::MatrixXd solved = llt.solve(diff.transpose());
    for (int64_t i = 0; i < n; ++i) {
      const double score = -0.5 * diff.row(i).dot(solved.col(i));
      if (score < spec.mahala_threshold) candidates.push_back(start + i);
    }
  }
  return gather(store, std::move(candidates), spec.minibatch, rng);
}

AnchorBatch sample_anchors(const ExperienceStore& store, const Matrix2D& recent_features,
                           const OodSpec& spec, Rng& rng) {
  return spec.kind == OodKind::L2
             ? sample_anchors_l2(store, recent_features, spec, rng)
             : sample_anchors_mahalanobis(store, recent_features, spec, rng);
}

}  // namespace lcpo
