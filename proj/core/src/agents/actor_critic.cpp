#include "lcpo/agents/actor_critic.hpp"

#include <cfloat>
#include <cmath>
#include <cstring>
#include <span>
#include <stdexcept>

#include "lcpo/distributions.hpp"
#include "lcpo/tensor/checkpoint.hpp"

namespace lcpo {

namespace {

constexpr char kExtrasMagic[4] = {'L', 'C', 'P', 'X'};

void write_extras(std::ostream& out, double log_alpha) {
  out.write(kExtrasMagic, 4);
  const uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&log_alpha), sizeof(log_alpha));
  if (!out) throw std::runtime_error("agent checkpoint: write failed");
}

double read_extras(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kExtrasMagic, 4) != 0)
    throw std::runtime_error("agent checkpoint: bad extras magic");
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != 1) throw std::runtime_error("agent checkpoint: bad extras version");
  double log_alpha = 0.0;
  in.read(reinterpret_cast<char*>(&log_alpha), sizeof(log_alpha));
  if (!in) throw std::runtime_error("agent checkpoint: truncated extras");
  return log_alpha;
}

void load_into(std::istream& in, Mlp& net) {
  MlpSpec spec;
  ParamVector params;
  load_net(in, spec, params);
  if (!(spec == net.spec()))
    throw std::runtime_error("agent checkpoint: network shape mismatch");
  net.set_params(params);
}

}  // namespace

namespace ac_detail {

ActResult sample_policy(Mlp& actor, Mlp& critic, const Eigen::RowVectorXd& obs, ActMode mode,
                        Rng& rng) {
  Matrix2D row(1, obs.cols());
  row.row(0) = obs;
  const Matrix2D probs = actor.forward(row);
  int action = 0;
  if (mode == ActMode::Greedy) {
    probs.row(0).maxCoeff(&action);
  } else {
    action = rng.categorical(std::span<const double>(probs.data(), probs.cols()));
  }
  ActResult r;
  r.action = action;
  r.log_prob = std::log(std::max(probs(0, action), DBL_MIN));
  r.value = critic.forward(row)(0, 0);
  return r;
}

PreparedBatch prepare_batch(Mlp& critic, const RolloutBatch& rollout, double gamma,
                            double lambda) {
  if (rollout.transitions.empty())
    throw std::logic_error("prepare_batch: empty rollout");
  PreparedBatch p;
  p.batch.obs = rollout.obs_matrix();
  p.batch.actions = rollout.actions();
  p.batch.behavior_log_probs = rollout.behavior_log_probs();
  p.features = rollout.features_matrix();

  const Eigen::VectorXd values = critic.forward(p.batch.obs).col(0);
  const auto& last = rollout.transitions.back();
  double bootstrap = 0.0;
  if (!last.done) {
    Matrix2D next(1, last.next_obs.cols());
    next.row(0) = last.next_obs;
    bootstrap = critic.forward(next)(0, 0);
  }
  std::vector<bool> dones(rollout.transitions.size());
  for (size_t i = 0; i < rollout.transitions.size(); ++i) dones[i] = rollout.transitions[i].done;

  GaeResult g = gae_advantages(rollout.rewards(), values, dones, gamma, lambda, bootstrap);
  normalize_advantages(g.advantages);
  p.batch.advantages = std::move(g.advantages);
  p.returns = std::move(g.returns);
  return p;
}

ParamVector policy_gradient(Mlp& actor, const CategoricalBatch& dist, const SolverBatch& batch,
                            double alpha) {
  const auto n = batch.obs.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix2D upstream = dist.probs;
  for (Eigen::Index i = 0; i < n; ++i) {
    upstream.row(i) *= -batch.advantages[i] * inv_n;
    upstream(i, batch.actions[static_cast<size_t>(i)]) += batch.advantages[i] * inv_n;
  }
  if (alpha != 0.0) upstream += alpha * mean_entropy_logit_grad(dist);
  actor.forward_logits(batch.obs);  // refresh cache for the reverse pass
  return actor.backward_from_logits(batch.obs, upstream);
}

CriticUpdate critic_update(Mlp& critic, Adam& opt, const Matrix2D& obs,
                           const Eigen::VectorXd& returns) {
  const auto n = obs.rows();
  const Eigen::VectorXd pred = critic.forward(obs).col(0);
  const Eigen::VectorXd err = pred - returns;
  CriticUpdate cu;
  cu.loss = err.squaredNorm() / static_cast<double>(n);
  Matrix2D upstream = (2.0 / static_cast<double>(n)) * err;
  const ParamVector grad = critic.backward(obs, upstream);
  if (!all_finite(grad)) return cu;
  ParamVector params = critic.get_params();
  opt.step(params, grad);
  critic.set_params(params);
  cu.applied = true;
  return cu;
}

}  // namespace ac_detail

void ActorCriticParams::validate() const {
  if (obs_dim <= 0) throw std::invalid_argument("ActorCriticParams: obs_dim must be positive");
  if (n_actions < 2) throw std::invalid_argument("ActorCriticParams: need at least 2 actions");
  if (lr_actor <= 0 || lr_critic <= 0)
    throw std::invalid_argument("ActorCriticParams: learning rates must be positive");
  if (gamma <= 0 || gamma > 1) throw std::invalid_argument("ActorCriticParams: gamma out of range");
  if (lambda < 0 || lambda > 1)
    throw std::invalid_argument("ActorCriticParams: lambda out of range");
  if (!std::isfinite(entropy_target))
    throw std::invalid_argument("ActorCriticParams: entropy_target must be finite");
  if (optimizer != PolicyOptimizer::PlainPg) {
    if (feature_dim <= 0)
      throw std::invalid_argument("ActorCriticParams: anchored variants need feature_dim");
    constraint.validate();
    ppo.validate();
    ood.validate();
  }
}

ActorCriticAgent::ActorCriticAgent(const ActorCriticParams& params, Rng& init_rng)
    : params_(params),
      actor_(MlpSpec{params.obs_dim, params.actor_hidden, params.n_actions,
                     OutputActivation::Softmax},
             init_rng),
      critic_(MlpSpec{params.obs_dim, params.critic_hidden, 1, OutputActivation::Identity},
              init_rng),
      actor_opt_({params.lr_actor, 0.9, 0.999, 1e-8, params.weight_decay},
                 actor_.param_count()),
      critic_opt_({params.lr_critic, 0.9, 0.999, 1e-8, params.weight_decay},
                  critic_.param_count()),
      update_rng_(init_rng.fork(17)) {
  params_.validate();
  if (params_.entropy_base > 0)
    tuner_.emplace(params_.entropy_base, params_.entropy_target, params_.tuner_lr);
  if (anchored())
    store_.emplace(params_.obs_dim, params_.feature_dim, params_.n_actions);
}

ActResult ActorCriticAgent::act(const Eigen::RowVectorXd& obs, ActMode mode, Rng& rng) {
  return ac_detail::sample_policy(actor_, critic_, obs, mode, rng);
}

Eigen::VectorXd ActorCriticAgent::action_probs(const Eigen::RowVectorXd& obs) {
  Matrix2D row(1, obs.cols());
  row.row(0) = obs;
  return actor_.forward(row).row(0).transpose();
}

void ActorCriticAgent::observe(const Transition& t) { rollout_.transitions.push_back(t); }

UpdateStats ActorCriticAgent::update(int64_t epoch) {
  UpdateStats s;
  if (rollout_.transitions.empty()) return s;

  auto prep = ac_detail::prepare_batch(critic_, rollout_, params_.gamma, params_.lambda);
  const Matrix2D logits = actor_.forward_logits(prep.batch.obs);
  const CategoricalBatch dist0 = CategoricalBatch::from_logits(logits);
  const double measured_entropy = entropy(dist0);
  const double alpha = tuner_ ? tuner_->alpha() : 0.0;
  s.entropy = measured_entropy;
  s.alpha = alpha;

  const ParamVector v_pg = ac_detail::policy_gradient(actor_, dist0, prep.batch, alpha);
  s.v_pg_norm = v_pg.norm();
  const Eigen::VectorXd lp = log_prob(dist0, prep.batch.actions);
  s.actor_loss = -(lp.dot(prep.batch.advantages) / static_cast<double>(prep.batch.obs.rows()) +
                   alpha * measured_entropy);

  AnchorBatch anchors;
  if (anchored() && store_->size() > 0)
    anchors = sample_anchors(*store_, prep.features, params_.ood, update_rng_);
  s.anchor_count = anchors.obs.rows();

  if (!all_finite(v_pg)) {
    // A bad batch is dropped rather than allowed to poison the optimizer.
    s.updated = false;
  } else if (anchors.empty()) {
    // Alg. behavior with nothing to anchor: plain Adam policy-gradient step.
    ParamVector grad = -v_pg;
    ParamVector p = actor_.get_params();
    actor_opt_.step(p, grad);
    actor_.set_params(p);
    s.updated = true;
  } else {
    s.solver_step = true;
    s.updated = true;
    switch (params_.optimizer) {
      case PolicyOptimizer::LcpoS: {
        const SearchDirection dir = lcpo_s_step(actor_, v_pg, prep.batch, anchors.obs,
                                                params_.constraint, alpha, params_.lr_actor);
        ParamVector p = actor_.get_params();
        p += dir.delta;
        actor_.set_params(p);
        s.kl_anchor_predicted = dir.predicted_kl_anchor;
        s.kl_anchor_realized = dir.realized_kl_anchor;
        s.kl_recent_realized = dir.realized_kl_recent;
        s.halvings = dir.halvings;
        s.step_accepted = dir.accepted;
        break;
      }
      case PolicyOptimizer::LcpoD: {
        const DualStepResult r = lcpo_d_step(actor_, v_pg, prep.batch, anchors.obs,
                                             params_.constraint, alpha);
        ParamVector p = actor_.get_params();
        p += r.dir.delta;
        actor_.set_params(p);
        s.kl_anchor_predicted = r.dir.predicted_kl_anchor;
        s.kl_anchor_realized = r.dir.realized_kl_anchor;
        s.kl_recent_realized = r.dir.realized_kl_recent;
        s.halvings = r.dir.halvings;
        s.step_accepted = r.dir.accepted;
        s.lambda_a = r.dual.lambda_a;
        s.lambda_b = r.dual.lambda_b;
        s.fallback = r.dual.fallback != DualFallback::None;
        break;
      }
      case PolicyOptimizer::LcpoP: {
        const PpoStepResult r =
            lcpo_p_step(actor_, actor_opt_, prep.batch, anchors.obs, params_.ppo, alpha);
        s.ppo_iters = r.iters;
        s.kl_recent_realized = r.final_kl_recent;
        s.kl_anchor_realized = r.final_kl_anchor;
        break;
      }
      case PolicyOptimizer::PlainPg:
        throw std::logic_error("plain policy gradient cannot reach the solver branch");
    }
  }

  const auto cu = ac_detail::critic_update(critic_, critic_opt_, prep.batch.obs, prep.returns);
  s.critic_loss = cu.loss;

  if (anchored()) {
    const Matrix2D probs = actor_.forward(prep.batch.obs);
    store_->append_batch(prep.batch.obs, prep.features, probs, epoch);
    s.store_size = store_->size();
  }
  if (tuner_) tuner_->update(measured_entropy);

  rollout_.transitions.clear();
  return s;
}

void ActorCriticAgent::save(std::ostream& out) const {
  save_net(out, actor_.spec(), actor_.get_params());
  save_net(out, critic_.spec(), critic_.get_params());
  write_extras(out, tuner_ ? tuner_->log_alpha() : 0.0);
}

void ActorCriticAgent::load(std::istream& in) {
  load_into(in, actor_);
  load_into(in, critic_);
  const double log_alpha = read_extras(in);
  if (tuner_) tuner_->restore(log_alpha);
}

}  // namespace lcpo
