#pragma once

#include <vector>

#include "lcpo/agents/agent.hpp"
#include "lcpo/agents/replay.hpp"
#include "lcpo/tensor/adam.hpp"
#include "lcpo/tensor/mlp.hpp"

namespace lcpo {

struct DdqnParams {
  int obs_dim = 0;
  int n_actions = 0;
  std::vector<int> hidden{64, 64};
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double gamma = 0.99;
  int batch_size = 512;
  double polyak = 0.01;        // target mix-in per gradient step
  int64_t random_period = 1000;  // epochs of forced-uniform acting
  int64_t eps_anneal = 5000;     // epsilon goes 1 -> 0 linearly over this many epochs

  void validate() const;
};

// Double DQN with an unbounded uniform replay and a Polyak-averaged target:
// targets bootstrap Q_target at the online network's argmax action.
class DdqnAgent : public Agent {
 public:
  DdqnAgent(const DdqnParams& params, Rng& init_rng);

  ActResult act(const Eigen::RowVectorXd& obs, ActMode mode, Rng& rng) override;
  Eigen::VectorXd action_probs(const Eigen::RowVectorXd& obs) override;
  void observe(const Transition& t) override;
  UpdateStats update(int64_t epoch) override;
  void save(std::ostream& out) const override;
  void load(std::istream& in) override;

  double epsilon() const;

 private:
  DdqnParams params_;
  Mlp q_;
  Mlp q_target_;
  Adam opt_;
  ReplayBuffer replay_;
  Rng update_rng_;
  int64_t epochs_done_ = 0;
};

}  // namespace lcpo
