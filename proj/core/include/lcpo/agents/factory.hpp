#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lcpo/agents/agent.hpp"
#include "lcpo/ood/samplers.hpp"
#include "lcpo/solver/steps.hpp"

namespace lcpo {

// Flat agent description, the union of every algorithm's knobs; the factory
// reads only the fields its kind uses. Defaults follow the benchmark's
// standard hyperparameter tables.
struct AgentSpec {
  std::string kind = "a2c";  // a2c | lcpo_s | lcpo_d | lcpo_p | trpo | ddqn | sac | tabular_a2c
  int obs_dim = 0;
  int n_actions = 0;
  int feature_dim = 0;  // exogenous slice width (LCPO variants)
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double lr_actor = 4e-4;
  double lr_critic = 1e-3;
  double weight_decay = 1e-4;
  double gamma = 0.99;
  double lambda = 0.9;
  double entropy_base = 0.0;     // <= 0 disables the entropy bonus
  double entropy_target = -1.0;  // < 0 resolves to 0.1 * ln(n_actions)
  double tuner_lr = 1e-3;
  ConstraintSpec constraint;
  PpoSpec ppo;
  OodSpec ood;
  double trpo_stepsize = 0.01;
  int batch_size = 512;
  double polyak = 0.01;
  int64_t random_period = 1000;
  int64_t eps_anneal = 5000;
  double tabular_lr_actor = 0.1;
  double tabular_lr_critic = 0.1;
  int tabular_states = 9;
  int tabular_inputs = 2;
};

// Throws std::invalid_argument on an unknown kind or bad parameters.
std::unique_ptr<Agent> make_agent(const AgentSpec& spec, Rng& init_rng);

// True for the anchored variants (the kinds that maintain an experience
// store and consume anchor minibatches).
bool is_anchored_kind(const std::string& kind);

}  // namespace lcpo
