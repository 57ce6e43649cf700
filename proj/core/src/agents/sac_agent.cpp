#include "lcpo/agents/sac_agent.hpp"

#include <cfloat>
#include <cmath>
#include <cstring>
#include <span>
#include <stdexcept>

#include "lcpo/distributions.hpp"
#include "lcpo/tensor/checkpoint.hpp"

namespace lcpo {

namespace {

// One Adam step of MSE on the taken-action entries; returns pre-step loss.
double critic_mse_step(Mlp& q, Adam& opt, const Matrix2D& obs, const std::vector<int>& actions,
                       const Eigen::VectorXd& target) {
  const auto n = obs.rows();
  const Matrix2D q_all = q.forward(obs);
  Eigen::VectorXd err(n);
  for (Eigen::Index i = 0; i < n; ++i)
    err[i] = q_all(i, actions[static_cast<size_t>(i)]) - target[i];
  const double loss = err.squaredNorm() / static_cast<double>(n);
  Matrix2D upstream = Matrix2D::Zero(n, q_all.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    upstream(i, actions[static_cast<size_t>(i)]) = 2.0 * err[i] / static_cast<double>(n);
  const ParamVector grad = q.backward(obs, upstream);
  if (!all_finite(grad)) return loss;
  ParamVector params = q.get_params();
  opt.step(params, grad);
  q.set_params(params);
  return loss;
}

void polyak_mix(Mlp& target, const Mlp& online, double tau) {
  ParamVector tp = target.get_params();
  tp = (1.0 - tau) * tp + tau * online.get_params();
  target.set_params(tp);
}

}  // namespace

void SacParams::validate() const {
  if (obs_dim <= 0) throw std::invalid_argument("SacParams: obs_dim must be positive");
  if (n_actions < 2) throw std::invalid_argument("SacParams: need at least 2 actions");
  if (lr_actor <= 0 || lr_critic <= 0)
    throw std::invalid_argument("SacParams: learning rates must be positive");
  if (gamma <= 0 || gamma > 1) throw std::invalid_argument("SacParams: gamma out of range");
  if (batch_size <= 0) throw std::invalid_argument("SacParams: batch_size must be positive");
  if (polyak <= 0 || polyak > 1) throw std::invalid_argument("SacParams: polyak out of range");
  if (entropy_base <= 0) throw std::invalid_argument("SacParams: entropy_base must be positive");
}

SacAgent::SacAgent(const SacParams& params, Rng& init_rng)
    : params_(params),
      actor_(MlpSpec{params.obs_dim, params.actor_hidden, params.n_actions,
                     OutputActivation::Softmax},
             init_rng),
      q1_(MlpSpec{params.obs_dim, params.critic_hidden, params.n_actions,
                  OutputActivation::Identity},
          init_rng),
      q2_(MlpSpec{params.obs_dim, params.critic_hidden, params.n_actions,
                  OutputActivation::Identity},
          init_rng),
      q1_target_(q1_),
      q2_target_(q2_),
      actor_opt_({params.lr_actor, 0.9, 0.999, 1e-8, params.weight_decay},
                 actor_.param_count()),
      q1_opt_({params.lr_critic, 0.9, 0.999, 1e-8, params.weight_decay}, q1_.param_count()),
      q2_opt_({params.lr_critic, 0.9, 0.999, 1e-8, params.weight_decay}, q2_.param_count()),
      tuner_(params.entropy_base, params.entropy_target, params.tuner_lr),
      update_rng_(init_rng.fork(17)) {
  params_.validate();
}

ActResult SacAgent::act(const Eigen::RowVectorXd& obs, ActMode mode, Rng& rng) {
  Matrix2D row(1, obs.cols());
  row.row(0) = obs;
  ActResult r;
  if (mode == ActMode::Explore && epochs_done_ < params_.random_period) {
    r.action = rng.uniform_int(params_.n_actions);
    r.log_prob = -std::log(static_cast<double>(params_.n_actions));
    return r;
  }
  const Matrix2D probs = actor_.forward(row);
  if (mode == ActMode::Greedy) {
    int action = 0;
    probs.row(0).maxCoeff(&action);
    r.action = action;
  } else {
    r.action = rng.categorical(std::span<const double>(probs.data(), probs.cols()));
  }
  r.log_prob = std::log(std::max(probs(0, r.action), DBL_MIN));
  return r;
}

Eigen::VectorXd SacAgent::action_probs(const Eigen::RowVectorXd& obs) {
  Matrix2D row(1, obs.cols());
  row.row(0) = obs;
  return actor_.forward(row).row(0).transpose();
}

void SacAgent::observe(const Transition& t) { replay_.add(t); }

UpdateStats SacAgent::update(int64_t epoch) {
  epochs_done_ = epoch + 1;
  UpdateStats s;
  s.alpha = tuner_.alpha();
  if (replay_.size() < params_.batch_size) return s;

  const ReplaySample b = replay_.sample(params_.batch_size, update_rng_);
  const auto n = static_cast<Eigen::Index>(params_.batch_size);
  const double alpha = tuner_.alpha();

  // Soft bootstrap target: expectation over next actions under the current
  // policy, with the elementwise min of the two target critics.
  const CategoricalBatch dist_next =
      CategoricalBatch::from_logits(actor_.forward_logits(b.next_obs));
  const Matrix2D q1t = q1_target_.forward(b.next_obs);
  const Matrix2D q2t = q2_target_.forward(b.next_obs);
  const Matrix2D min_qt = q1t.cwiseMin(q2t);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double soft_v =
        dist_next.probs.row(i).dot(min_qt.row(i) - alpha * dist_next.log_probs.row(i));
    const double live = b.dones[static_cast<size_t>(i)] ? 0.0 : 1.0;
    target[i] = b.rewards[i] + params_.gamma * live * soft_v;
  }

  s.critic_loss = 0.5 * (critic_mse_step(q1_, q1_opt_, b.obs, b.actions, target) +
                         critic_mse_step(q2_, q2_opt_, b.obs, b.actions, target));

  // Actor: minimize E_s sum_a pi(a|s) (alpha ln pi(a|s) - min Q(s,a)) using
  // the just-updated critics.
  const Matrix2D min_q = q1_.forward(b.obs).cwiseMin(q2_.forward(b.obs));
  const CategoricalBatch dist = CategoricalBatch::from_logits(actor_.forward_logits(b.obs));
  const Matrix2D g = alpha * dist.log_probs - min_q;
  Matrix2D upstream(n, params_.n_actions);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g_bar = dist.probs.row(i).dot(g.row(i));
    upstream.row(i) =
        (dist.probs.row(i).array() * (g.row(i).array() - g_bar)).matrix() / static_cast<double>(n);
  }
  const Eigen::VectorXd ent = entropy_per_row(dist);
  const double measured_entropy = ent.mean();
  s.entropy = measured_entropy;
  s.actor_loss = (dist.probs.cwiseProduct(g)).sum() / static_cast<double>(n);

  const ParamVector grad = actor_.backward_from_logits(b.obs, upstream);
  if (all_finite(grad)) {
    ParamVector params = actor_.get_params();
    actor_opt_.step(params, grad);
    actor_.set_params(params);
    s.updated = true;
  }

  s.alpha = tuner_.update(measured_entropy);
  polyak_mix(q1_target_, q1_, params_.polyak);
  polyak_mix(q2_target_, q2_, params_.polyak);
  return s;
}

void SacAgent::save(std::ostream& out) const {
  for (const Mlp* net : {&actor_, &q1_, &q2_, &q1_target_, &q2_target_})
    save_net(out, net->spec(), net->get_params());
  const double log_alpha = tuner_.log_alpha();
  out.write(reinterpret_cast<const char*>(&log_alpha), sizeof(log_alpha));
  out.write(reinterpret_cast<const char*>(&epochs_done_), sizeof(epochs_done_));
  if (!out) throw std::runtime_error("agent checkpoint: write failed");
}

void SacAgent::load(std::istream& in) {
  for (Mlp* net : {&actor_, &q1_, &q2_, &q1_target_, &q2_target_}) {
    MlpSpec spec;
    ParamVector params;
    load_net(in, spec, params);
    if (!(spec == net->spec()))
      throw std::runtime_error("agent checkpoint: network shape mismatch");
    net->set_params(params);
  }
  double log_alpha = 0.0;
  in.read(reinterpret_cast<char*>(&log_alpha), sizeof(log_alpha));
  in.read(reinterpret_cast<char*>(&epochs_done_), sizeof(epochs_done_));
  if (!in) throw std::runtime_error("agent checkpoint: truncated");
  tuner_.restore(log_alpha);
}

}  // namespace lcpo
