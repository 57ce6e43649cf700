#pragma once

#include <vector>

#include "lcpo/agents/actor_critic.hpp"

namespace lcpo {

struct TrpoParams {
  int obs_dim = 0;
  int n_actions = 0;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double lr_critic = 1e-3;
  double weight_decay = 1e-4;
  double gamma = 0.99;
  double lambda = 0.9;
  double stepsize = 0.01;  // KL trust-region radius per update
  ConstraintSpec constraint;

  void validate() const;
};

// Single-constraint trust-region baseline: natural-gradient step on the
// recent batch, halving line search, no entropy bonus, critic via Adam.
class TrpoAgent : public Agent {
 public:
  TrpoAgent(const TrpoParams& params, Rng& init_rng);

  ActResult act(const Eigen::RowVectorXd& obs, ActMode mode, Rng& rng) override;
  Eigen::VectorXd action_probs(const Eigen::RowVectorXd& obs) override;
  void observe(const Transition& t) override;
  UpdateStats update(int64_t epoch) override;
  void save(std::ostream& out) const override;
  void load(std::istream& in) override;

 private:
  TrpoParams params_;
  Mlp actor_;
  Mlp critic_;
  Adam critic_opt_;
  RolloutBatch rollout_;
};

}  // namespace lcpo
