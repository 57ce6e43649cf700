#include "lcpo/agents/ddqn_agent.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "lcpo/tensor/checkpoint.hpp"

namespace lcpo {

void DdqnParams::validate() const {
  if (obs_dim <= 0) throw std::invalid_argument("DdqnParams: obs_dim must be positive");
  if (n_actions < 2) throw std::invalid_argument("DdqnParams: need at least 2 actions");
  if (lr <= 0) throw std::invalid_argument("DdqnParams: lr must be positive");
  if (gamma <= 0 || gamma > 1) throw std::invalid_argument("DdqnParams: gamma out of range");
  if (batch_size <= 0) throw std::invalid_argument("DdqnParams: batch_size must be positive");
  if (polyak <= 0 || polyak > 1) throw std::invalid_argument("DdqnParams: polyak out of range");
  if (eps_anneal <= 0) throw std::invalid_argument("DdqnParams: eps_anneal must be positive");
}

DdqnAgent::DdqnAgent(const DdqnParams& params, Rng& init_rng)
    : params_(params),
      q_(MlpSpec{params.obs_dim, params.hidden, params.n_actions, OutputActivation::Identity},
         init_rng),
      q_target_(q_),
      opt_({params.lr, 0.9, 0.999, 1e-8, params.weight_decay}, q_.param_count()),
      update_rng_(init_rng.fork(17)) {
  params_.validate();
}

double DdqnAgent::epsilon() const {
  if (epochs_done_ < params_.random_period) return 1.0;
  return std::max(0.0, 1.0 - static_cast<double>(epochs_done_) /
                            static_cast<double>(params_.eps_anneal));
}

ActResult DdqnAgent::act(const Eigen::RowVectorXd& obs, ActMode mode, Rng& rng) {
  Matrix2D row(1, obs.cols());
  row.row(0) = obs;
  ActResult r;
  if (mode == ActMode::Explore && rng.uniform() < epsilon()) {
    r.action = rng.uniform_int(params_.n_actions);
    const Matrix2D q = q_.forward(row);
    r.value = q(0, r.action);
    return r;
  }
  const Matrix2D q = q_.forward(row);
  int action = 0;
  r.value = q.row(0).maxCoeff(&action);
  r.action = action;
  return r;
}

Eigen::VectorXd DdqnAgent::action_probs(const Eigen::RowVectorXd& obs) {
  // Value-based policy: probability mass sits on the greedy action.
  Matrix2D row(1, obs.cols());
  row.row(0) = obs;
  const Matrix2D q = q_.forward(row);
  int action = 0;
  q.row(0).maxCoeff(&action);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(params_.n_actions);
  p[action] = 1.0;
  return p;
}

void DdqnAgent::observe(const Transition& t) { replay_.add(t); }

UpdateStats DdqnAgent::update(int64_t epoch) {
  epochs_done_ = epoch + 1;
  UpdateStats s;
  s.epsilon = epsilon();
  if (replay_.size() < params_.batch_size) return s;  // not enough data yet

  const ReplaySample b = replay_.sample(params_.batch_size, update_rng_);
  const auto n = static_cast<Eigen::Index>(params_.batch_size);

  const Matrix2D q_next = q_.forward(b.next_obs);
  const Matrix2D qt_next = q_target_.forward(b.next_obs);
  const Matrix2D q_all = q_.forward(b.obs);

  Eigen::VectorXd pred(n), target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    int a_star = 0;
    q_next.row(i).maxCoeff(&a_star);
    const double live = b.dones[static_cast<size_t>(i)] ? 0.0 : 1.0;
    target[i] = b.rewards[i] + params_.gamma * live * qt_next(i, a_star);
    pred[i] = q_all(i, b.actions[static_cast<size_t>(i)]);
  }
  const Eigen::VectorXd err = pred - target;
  s.critic_loss = err.squaredNorm() / static_cast<double>(n);

  Matrix2D upstream = Matrix2D::Zero(n, params_.n_actions);
  for (Eigen::Index i = 0; i < n; ++i)
    upstream(i, b.actions[static_cast<size_t>(i)]) = 2.0 * err[i] / static_cast<double>(n);
  const ParamVector grad = q_.backward(b.obs, upstream);  // cache still holds b.obs
  if (!all_finite(grad)) return s;

  ParamVector params = q_.get_params();
  opt_.step(params, grad);
  q_.set_params(params);

  ParamVector tp = q_target_.get_params();
  tp = (1.0 - params_.polyak) * tp + params_.polyak * params;
  q_target_.set_params(tp);

  s.updated = true;
  return s;
}

void DdqnAgent::save(std::ostream& out) const {
  save_net(out, q_.spec(), q_.get_params());
  save_net(out, q_target_.spec(), q_target_.get_params());
  out.write(reinterpret_cast<const char*>(&epochs_done_), sizeof(epochs_done_));
  if (!out) throw std::runtime_error("agent checkpoint: write failed");
}

void DdqnAgent::load(std::istream& in) {
  for (Mlp* net : {&q_, &q_target_}) {
    MlpSpec spec;
    ParamVector params;
    load_net(in, spec, params);
    if (!(spec == net->spec()))
      throw std::runtime_error("agent checkpoint: network shape mismatch");
    net->set_params(params);
  }
  in.read(reinterpret_cast<char*>(&epochs_done_), sizeof(epochs_done_));
  if (!in) throw std::runtime_error("agent checkpoint: truncated");
}

}  // namespace lcpo
