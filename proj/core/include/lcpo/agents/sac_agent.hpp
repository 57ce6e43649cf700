#pragma once

#include <vector>

#include "lcpo/agents/agent.hpp"
#include "lcpo/agents/replay.hpp"
#include "lcpo/agents/tuner.hpp"
#include "lcpo/tensor/adam.hpp"
#include "lcpo/tensor/mlp.hpp"

namespace lcpo {

struct SacParams {
  int obs_dim = 0;
  int n_actions = 0;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double lr_actor = 4e-4;
  double lr_critic = 1e-3;
  double weight_decay = 1e-4;
  double gamma = 0.99;
  int batch_size = 512;
  double polyak = 0.01;
  int64_t random_period = 1000;
  double entropy_base = 0.1;
  double entropy_target = 0.0;
  double tuner_lr = 1e-3;

  void validate() const;
};

// Discrete soft actor-critic: twin critics with Polyak targets, soft value
// targets as an expectation over actions, and an auto-tuned temperature.
class SacAgent : public Agent {
 public:
  SacAgent(const SacParams& params, Rng& init_rng);

  ActResult act(const Eigen::RowVectorXd& obs, ActMode mode, Rng& rng) override;
  Eigen::VectorXd action_probs(const Eigen::RowVectorXd& obs) override;
  void observe(const Transition& t) override;
  UpdateStats update(int64_t epoch) override;
  void save(std::ostream& out) const override;
  void load(std::istream& in) override;

 private:
  SacParams params_;
  Mlp actor_;
  Mlp q1_;
  Mlp q2_;
  Mlp q1_target_;
  Mlp q2_target_;
  Adam actor_opt_;
  Adam q1_opt_;
  Adam q2_opt_;
  EntropyTuner tuner_;
  ReplayBuffer replay_;
  Rng update_rng_;
  int64_t epochs_done_ = 0;
};

}  // namespace lcpo
