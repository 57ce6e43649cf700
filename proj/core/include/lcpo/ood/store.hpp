#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lcpo/tensor/matrix.hpp"

namespace lcpo {

// Append-only archive of past experience: observation, the exogenous input
// feature slice, and the policy's output probabilities frozen at storage
// time. Stored probs are diagnostics only — anchor targets are recomputed
// from the live pre-update network. Backed by capacity-doubling matrices so
// multi-million-record stores stay scan-friendly.
class ExperienceStore {
 public:
  ExperienceStore(int obs_dim, int feat_dim, int n_actions);

  void append(const Eigen::RowVectorXd& obs, const Eigen::RowVectorXd& features,
              const Eigen::RowVectorXd& probs, int64_t epoch);
  void append_batch(const Matrix2D& obs, const Matrix2D& features, const Matrix2D& probs,
                    int64_t epoch);

  int64_t size() const { return rows_; }
  int obs_dim() const { return obs_dim_; }
  int feat_dim() const { return feat_dim_; }
  int n_actions() const { return n_actions_; }

  Eigen::Ref<const Matrix2D> obs() const { return obs_.topRows(rows_); }
  Eigen::Ref<const Matrix2D> features() const { return features_.topRows(rows_); }
  Eigen::Ref<const Matrix2D> probs() const { return probs_.topRows(rows_); }
  int64_t epoch_of(int64_t i) const { return epochs_[static_cast<size_t>(i)]; }

  // Versioned binary snapshot for post-hoc analysis.
  void save(const std::string& path) const;
  static ExperienceStore load(const std::string& path);

 private:
  void reserve(int64_t rows);

  int obs_dim_;
  int feat_dim_;
  int n_actions_;
  int64_t rows_ = 0;
  Matrix2D obs_;
  Matrix2D features_;
  Matrix2D probs_;
  std::vector<int64_t> epochs_;
};

}  // namespace lcpo
