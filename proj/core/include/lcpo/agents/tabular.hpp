#pragma once

#include "lcpo/agents/agent.hpp"

namespace lcpo {

struct TabularParams {
  int n_states = 9;   // width of the leading one-hot state block in obs
  int n_inputs = 2;   // width of the trailing one-hot input block
  int n_actions = 4;
  double lr_actor = 0.1;
  double lr_critic = 0.1;
  double gamma = 0.99;
  double lambda = 0.9;

  void validate() const;
};

// Actor-critic over a table with one row per (state, input) pair. Rows are
// only ever touched by updates for their own pair, so training under one
// input provably cannot disturb behavior under another; untouched rows stay
// at the uniform-policy initialization.
class TabularA2cAgent : public Agent {
 public:
  TabularA2cAgent(const TabularParams& params);

  ActResult act(const Eigen::RowVectorXd& obs, ActMode mode, Rng& rng) override;
  Eigen::VectorXd action_probs(const Eigen::RowVectorXd& obs) override;
  void observe(const Transition& t) override;
  UpdateStats update(int64_t epoch) override;
  void save(std::ostream& out) const override;
  void load(std::istream& in) override;

  int row_of(const Eigen::RowVectorXd& obs) const;
  const Matrix2D& logits() const { return logits_; }
  const Eigen::VectorXd& values() const { return values_; }

 private:
  Eigen::VectorXd policy_row(int row) const;  // softmax of one logit row

  TabularParams params_;
  Matrix2D logits_;        // (n_states * n_inputs) x n_actions
  Eigen::VectorXd values_;
  RolloutBatch rollout_;
};

}  // namespace lcpo
