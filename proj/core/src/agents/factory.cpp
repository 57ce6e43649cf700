#include "lcpo/agents/factory.hpp"

#include <cmath>
#include <stdexcept>

#include "lcpo/agents/actor_critic.hpp"
#include "lcpo/agents/ddqn_agent.hpp"
#include "lcpo/agents/sac_agent.hpp"
#include "lcpo/agents/tabular.hpp"
#include "lcpo/agents/trpo_agent.hpp"

namespace lcpo {

namespace {

double resolve_entropy_target(const AgentSpec& spec) {
  if (spec.entropy_target >= 0) return spec.entropy_target;
  return 0.1 * std::log(static_cast<double>(spec.n_actions));
}

}  // namespace

bool is_anchored_kind(const std::string& kind) {
  return kind == "lcpo_s" || kind == "lcpo_d" || kind == "lcpo_p";
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, Rng& init_rng) {
  if (spec.kind == "a2c" || is_anchored_kind(spec.kind)) {
    ActorCriticParams p;
    p.obs_dim = spec.obs_dim;
    p.n_actions = spec.n_actions;
    p.feature_dim = spec.feature_dim;
    p.actor_hidden = spec.actor_hidden;
    p.critic_hidden = spec.critic_hidden;
    p.lr_actor = spec.lr_actor;
    p.lr_critic = spec.lr_critic;
    p.weight_decay = spec.weight_decay;
    p.gamma = spec.gamma;
    p.lambda = spec.lambda;
    p.entropy_base = spec.entropy_base;
    p.entropy_target = resolve_entropy_target(spec);
    p.tuner_lr = spec.tuner_lr;
    p.constraint = spec.constraint;
    p.ppo = spec.ppo;
    p.ood = spec.ood;
    if (spec.kind == "a2c") p.optimizer = PolicyOptimizer::PlainPg;
    else if (spec.kind == "lcpo_s") p.optimizer = PolicyOptimizer::LcpoS;
    else if (spec.kind == "lcpo_d") p.optimizer = PolicyOptimizer::LcpoD;
    else p.optimizer = PolicyOptimizer::LcpoP;
    return std::make_unique<ActorCriticAgent>(p, init_rng);
  }
  if (spec.kind == "trpo") {
    TrpoParams p;
    p.obs_dim = spec.obs_dim;
    p.n_actions = spec.n_actions;
    p.actor_hidden = spec.actor_hidden;
    p.critic_hidden = spec.critic_hidden;
    p.lr_critic = spec.lr_critic;
    p.weight_decay = spec.weight_decay;
    p.gamma = spec.gamma;
    p.lambda = spec.lambda;
    p.stepsize = spec.trpo_stepsize;
    p.constraint = spec.constraint;
    return std::make_unique<TrpoAgent>(p, init_rng);
  }
  if (spec.kind == "ddqn") {
    DdqnParams p;
    p.obs_dim = spec.obs_dim;
    p.n_actions = spec.n_actions;
    p.hidden = spec.critic_hidden;
    p.lr = spec.lr_critic;
    p.weight_decay = spec.weight_decay;
    p.gamma = spec.gamma;
    p.batch_size = spec.batch_size;
    p.polyak = spec.polyak;
    p.random_period = spec.random_period;
    p.eps_anneal = spec.eps_anneal;
    return std::make_unique<DdqnAgent>(p, init_rng);
  }
  if (spec.kind == "sac") {
    SacParams p;
    p.obs_dim = spec.obs_dim;
    p.n_actions = spec.n_actions;
    p.actor_hidden = spec.actor_hidden;
    p.critic_hidden = spec.critic_hidden;
    p.lr_actor = spec.lr_actor;
    p.lr_critic = spec.lr_critic;
    p.weight_decay = spec.weight_decay;
    p.gamma = spec.gamma;
    p.batch_size = spec.batch_size;
    p.polyak = spec.polyak;
    p.random_period = spec.random_period;
    p.entropy_base = spec.entropy_base > 0 ? spec.entropy_base : 0.1;
    p.entropy_target = resolve_entropy_target(spec);
    p.tuner_lr = spec.tuner_lr;
    return std::make_unique<SacAgent>(p, init_rng);
  }
  if (spec.kind == "tabular_a2c") {
    TabularParams p;
    p.n_states = spec.tabular_states;
    p.n_inputs = spec.tabular_inputs;
    p.n_actions = spec.n_actions;
    p.lr_actor = spec.tabular_lr_actor;
    p.lr_critic = spec.tabular_lr_critic;
    p.gamma = spec.gamma;
    p.lambda = spec.lambda;
    return std::make_unique<TabularA2cAgent>(p);
  }
  throw std::invalid_argument("make_agent: unknown agent kind '" + spec.kind + "'");
}

}  // namespace lcpo
