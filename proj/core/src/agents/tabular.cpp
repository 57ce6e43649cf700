#include "lcpo/agents/tabular.hpp"

#include <cfloat>
#include <cmath>
#include <cstring>
#include <span>
#include <stdexcept>

#include "lcpo/agents/gae.hpp"

namespace lcpo {

namespace {
constexpr char kMagic[4] = {'L', 'C', 'P', 'T'};
}

void TabularParams::validate() const {
  if (n_states <= 0 || n_inputs <= 0)
    throw std::invalid_argument("TabularParams: table dimensions must be positive");
  if (n_actions < 2) throw std::invalid_argument("TabularParams: need at least 2 actions");
  if (lr_actor <= 0 || lr_critic <= 0)
    throw std::invalid_argument("TabularParams: learning rates must be positive");
}

TabularA2cAgent::TabularA2cAgent(const TabularParams& params)
    : params_(params),
      logits_(Matrix2D::Zero(params.n_states * params.n_inputs, params.n_actions)),
      values_(Eigen::VectorXd::Zero(params.n_states * params.n_inputs)) {
  params_.validate();
}

int TabularA2cAgent::row_of(const Eigen::RowVectorXd& obs) const {
  if (obs.cols() != params_.n_states + params_.n_inputs)
    throw std::invalid_argument("TabularA2cAgent: obs width mismatch");
  int state = 0, input = 0;
  obs.head(params_.n_states).maxCoeff(&state);
  obs.tail(params_.n_inputs).maxCoeff(&input);
  return state * params_.n_inputs + input;
}

Eigen::VectorXd TabularA2cAgent::policy_row(int row) const {
  Eigen::VectorXd z = logits_.row(row).transpose();
  z.array() -= z.maxCoeff();
  Eigen::VectorXd p = z.array().exp();
  return p / p.sum();
}

ActResult TabularA2cAgent::act(const Eigen::RowVectorXd& obs, ActMode mode, Rng& rng) {
  const int row = row_of(obs);
  const Eigen::VectorXd p = policy_row(row);
  ActResult r;
  if (mode == ActMode::Greedy) {
    int action = 0;
    p.maxCoeff(&action);
    r.action = action;
  } else {
    r.action = rng.categorical(std::span<const double>(p.data(), p.size()));
  }
  r.log_prob = std::log(std::max(p[r.action], DBL_MIN));
  r.value = values_[row];
  return r;
}

Eigen::VectorXd TabularA2cAgent::action_probs(const Eigen::RowVectorXd& obs) {
  return policy_row(row_of(obs));
}

void TabularA2cAgent::observe(const Transition& t) { rollout_.transitions.push_back(t); }

UpdateStats TabularA2cAgent::update(int64_t) {
  UpdateStats s;
  if (rollout_.transitions.empty()) return s;
  const auto& ts = rollout_.transitions;
  const auto n = static_cast<Eigen::Index>(ts.size());

  Eigen::VectorXd values(n);
  std::vector<bool> dones(ts.size());
  std::vector<int> rows(ts.size());
  for (size_t i = 0; i < ts.size(); ++i) {
    rows[i] = row_of(ts[i].obs);
    values[static_cast<Eigen::Index>(i)] = values_[rows[i]];
    dones[i] = ts[i].done;
  }
  const double bootstrap = ts.back().done ? 0.0 : values_[row_of(ts.back().next_obs)];
  const GaeResult g =
      gae_advantages(rollout_.rewards(), values, dones, params_.gamma, params_.lambda, bootstrap);

  // Sequential per-visit updates; raw advantages (tables have no batch-scale
  // coupling that normalization would need to tame).
  double ent = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const int row = rows[static_cast<size_t>(t)];
    const int a = ts[static_cast<size_t>(t)].action;
    const Eigen::VectorXd p = policy_row(row);
    Eigen::VectorXd grad = -p;
    grad[a] += 1.0;
    logits_.row(row) += (params_.lr_actor * g.advantages[t]) * grad.transpose();
    values_[row] += params_.lr_critic * (g.returns[t] - values_[row]);
    for (Eigen::Index k = 0; k < p.size(); ++k)
      if (p[k] > 0) ent -= p[k] * std::log(p[k]);
  }
  s.entropy = ent / static_cast<double>(n);
  s.critic_loss = (g.returns - values).squaredNorm() / static_cast<double>(n);
  s.updated = true;
  rollout_.transitions.clear();
  return s;
}

void TabularA2cAgent::save(std::ostream& out) const {
  out.write(kMagic, 4);
  const uint32_t version = 1;
  const uint32_t rows = static_cast<uint32_t>(logits_.rows());
  const uint32_t cols = static_cast<uint32_t>(logits_.cols());
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(logits_.data()),
            static_cast<std::streamsize>(sizeof(double) * logits_.size()));
  out.write(reinterpret_cast<const char*>(values_.data()),
            static_cast<std::streamsize>(sizeof(double) * values_.size()));
  if (!out) throw std::runtime_error("tabular checkpoint: write failed");
}

void TabularA2cAgent::load(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("tabular checkpoint: bad magic");
  uint32_t version = 0, rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || version != 1 || rows != static_cast<uint32_t>(logits_.rows()) ||
      cols != static_cast<uint32_t>(logits_.cols()))
    throw std::runtime_error("tabular checkpoint: shape mismatch");
  in.read(reinterpret_cast<char*>(logits_.data()),
          static_cast<std::streamsize>(sizeof(double) * logits_.size()));
  in.read(reinterpret_cast<char*>(values_.data()),
          static_cast<std::streamsize>(sizeof(double) * values_.size()));
  if (!in) throw std::runtime_error("tabular checkpoint: truncated");
}

}  // namespace lcpo
