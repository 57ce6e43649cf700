#include "lcpo/agents/trpo_agent.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "lcpo/distributions.hpp"
#include "lcpo/tensor/checkpoint.hpp"

namespace lcpo {

void TrpoParams::validate() const {
  if (obs_dim <= 0) throw std::invalid_argument("TrpoParams: obs_dim must be positive");
  if (n_actions < 2) throw std::invalid_argument("TrpoParams: need at least 2 actions");
  if (lr_critic <= 0) throw std::invalid_argument("TrpoParams: lr_critic must be positive");
  if (stepsize <= 0) throw std::invalid_argument("TrpoParams: stepsize must be positive");
  if (gamma <= 0 || gamma > 1) throw std::invalid_argument("TrpoParams: gamma out of range");
  if (lambda < 0 || lambda > 1) throw std::invalid_argument("TrpoParams: lambda out of range");
  constraint.validate();
}

TrpoAgent::TrpoAgent(const TrpoParams& params, Rng& init_rng)
    : params_(params),
      actor_(MlpSpec{params.obs_dim, params.actor_hidden, params.n_actions,
                     OutputActivation::Softmax},
             init_rng),
      critic_(MlpSpec{params.obs_dim, params.critic_hidden, 1, OutputActivation::Identity},
              init_rng),
      critic_opt_({params.lr_critic, 0.9, 0.999, 1e-8, params.weight_decay},
                  critic_.param_count()) {
  params_.validate();
}

ActResult TrpoAgent::act(const Eigen::RowVectorXd& obs, ActMode mode, Rng& rng) {
  return ac_detail::sample_policy(actor_, critic_, obs, mode, rng);
}

Eigen::VectorXd TrpoAgent::action_probs(const Eigen::RowVectorXd& obs) {
  Matrix2D row(1, obs.cols());
  row.row(0) = obs;
  return actor_.forward(row).row(0).transpose();
}

void TrpoAgent::observe(const Transition& t) { rollout_.transitions.push_back(t); }

UpdateStats TrpoAgent::update(int64_t) {
  UpdateStats s;
  if (rollout_.transitions.empty()) return s;

  auto prep = ac_detail::prepare_batch(critic_, rollout_, params_.gamma, params_.lambda);
  const Matrix2D logits = actor_.forward_logits(prep.batch.obs);
  const CategoricalBatch dist0 = CategoricalBatch::from_logits(logits);
  s.entropy = entropy(dist0);

  const ParamVector v_pg = ac_detail::policy_gradient(actor_, dist0, prep.batch, 0.0);
  s.v_pg_norm = v_pg.norm();
  const Eigen::VectorXd lp = log_prob(dist0, prep.batch.actions);
  s.actor_loss = -lp.dot(prep.batch.advantages) / static_cast<double>(prep.batch.obs.rows());

  if (all_finite(v_pg)) {
    const SearchDirection dir =
        trpo_step(actor_, v_pg, prep.batch, params_.stepsize, params_.constraint);
    ParamVector p = actor_.get_params();
    p += dir.delta;
    actor_.set_params(p);
    s.kl_recent_realized = dir.realized_kl_recent;
    s.halvings = dir.halvings;
    s.step_accepted = dir.accepted;
    s.updated = true;
    s.solver_step = true;
  }

  const auto cu = ac_detail::critic_update(critic_, critic_opt_, prep.batch.obs, prep.returns);
  s.critic_loss = cu.loss;

  rollout_.transitions.clear();
  return s;
}

void TrpoAgent::save(std::ostream& out) const {
  save_net(out, actor_.spec(), actor_.get_params());
  save_net(out, critic_.spec(), critic_.get_params());
}

void TrpoAgent::load(std::istream& in) {
  for (Mlp* net : {&actor_, &critic_}) {
    MlpSpec spec;
    ParamVector params;
    load_net(in, spec, params);
    if (!(spec == net->spec()))
      throw std::runtime_error("agent checkpoint: network shape mismatch");
    net->set_params(params);
  }
}

}  // namespace lcpo
