#pragma once

#include "lcpo/agents/rollout.hpp"

namespace lcpo {

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;  // advantage + value, the critic regression target
};

// Backward-recursive generalized advantage estimation:
//   delta_t = r_t + gamma (1 - done_t) V_{t+1} - V_t
//   A_t     = delta_t + gamma lambda (1 - done_t) A_{t+1}
// values has one entry per step; bootstrap_value stands in for V_{T} past
// the end of the batch (0 if the last step terminated).
GaeResult gae_advantages(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                         const std::vector<bool>& dones, double gamma, double lambda,
                         double bootstrap_value);

// In-place shift-and-scale to zero mean, unit variance. Batches of size one
// (or zero variance) are zeroed rather than divided by ~0.
void normalize_advantages(Eigen::VectorXd& advantages);

}  // namespace lcpo
