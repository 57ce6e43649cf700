#pragma once

#include "lcpo/ood/store.hpp"
#include "lcpo/util/rng.hpp"

namespace lcpo {

enum class OodKind { L2, Mahalanobis };

struct OodSpec {
  OodKind kind = OodKind::L2;
  double l2_threshold = 1.0;
  double mahala_threshold = -6.0;  // unnormalized Gaussian log-density bound
  int minibatch = 512;
  double covariance_ridge = 1e-6;

  void validate() const;
};

struct AnchorBatch {
  Matrix2D obs;
  Matrix2D frozen_probs;  // storage-time policy outputs, diagnostics only
  std::vector<int64_t> indices;

  bool empty() const { return obs.rows() == 0; }
};

// Candidates are records with |mean(recent features) - w_i|_2 above the
// threshold; the minibatch is a uniform draw without replacement.
AnchorBatch sample_anchors_l2(const ExperienceStore& store, const Matrix2D& recent_features,
                              const OodSpec& spec, Rng& rng);

// Fits a Gaussian to the recent features (full covariance, or diagonal when
// the batch is smaller than the feature dimension) and selects records whose
// score -(w-mu)' Sigma^-1 (w-mu) / 2 falls below the threshold M. Lower M is
// more conservative: fewer, more clearly out-of-distribution candidates.
AnchorBatch sample_anchors_mahalanobis(const ExperienceStore& store,
                                       const Matrix2D& recent_features, const OodSpec& spec,
                                       Rng& rng);

AnchorBatch sample_anchors(const ExperienceStore& store, const Matrix2D& recent_features,
                           const OodSpec& spec, Rng& rng);

}  // namespace lcpo
