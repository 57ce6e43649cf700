#pragma once

#include <cstdint>
#include <vector>

#include "lcpo/solver/steps.hpp"
#include "lcpo/tensor/matrix.hpp"

namespace lcpo {

struct Transition {
  Eigen::RowVectorXd obs;
  Eigen::RowVectorXd next_obs;
  Eigen::RowVectorXd input_features;  // the exogenous z_t slice of obs
  int action = 0;
  double reward = 0.0;
  bool done = false;
  double behavior_log_prob = 0.0;
  double value_estimate = 0.0;
};

struct RolloutBatch {
  std::vector<Transition> transitions;
  int64_t epoch = 0;

  int64_t size() const { return static_cast<int64_t>(transitions.size()); }
  Matrix2D obs_matrix() const;
  Matrix2D next_obs_matrix() const;
  Matrix2D features_matrix() const;
  std::vector<int> actions() const;
  Eigen::VectorXd rewards() const;
  Eigen::VectorXd behavior_log_probs() const;
};

}  // namespace lcpo
