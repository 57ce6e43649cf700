#include "lcpo/agents/gae.hpp"

#include <cmath>
#include <stdexcept>

namespace lcpo {

Matrix2D RolloutBatch::obs_matrix() const {
  if (transitions.empty()) return Matrix2D(0, 0);
  Matrix2D m(size(), transitions[0].obs.cols());
  for (int64_t i = 0; i < size(); ++i) m.row(i) = transitions[i].obs;
  return m;
}

Matrix2D RolloutBatch::next_obs_matrix() const {
  if (transitions.empty()) return Matrix2D(0, 0);
  Matrix2D m(size(), transitions[0].next_obs.cols());
  for (int64_t i = 0; i < size(); ++i) m.row(i) = transitions[i].next_obs;
  return m;
}

Matrix2D RolloutBatch::features_matrix() const {
  if (transitions.empty()) return Matrix2D(0, 0);
  Matrix2D m(size(), transitions[0].input_features.cols());
  for (int64_t i = 0; i < size(); ++i) m.row(i) = transitions[i].input_features;
  return m;
}

std::vector<int> RolloutBatch::actions() const {
  std::vector<int> a(transitions.size());
  for (size_t i = 0; i < transitions.size(); ++i) a[i] = transitions[i].action;
  return a;
}

Eigen::VectorXd RolloutBatch::rewards() const {
  Eigen::VectorXd r(size());
  for (int64_t i = 0; i < size(); ++i) r[i] = transitions[i].reward;
  return r;
}

Eigen::VectorXd RolloutBatch::behavior_log_probs() const {
  Eigen::VectorXd lp(size());
  for (int64_t i = 0; i < size(); ++i) lp[i] = transitions[i].behavior_log_prob;
  return lp;
}

GaeResult gae_advantages(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                         const std::vector<bool>& dones, double gamma, double lambda,
                         double bootstrap_value) {
  const auto n = rewards.size();
  if (values.size() != n || static_cast<Eigen::Index>(dones.size()) != n)
    throw std::invalid_argument("gae_advantages: length mismatch");
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double next_adv = 0.0;
  double next_value = bootstrap_value;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * live * next_value - values[t];
    next_adv = delta + gamma * lambda * live * next_adv;
    next_value = values[t];
    out.advantages[t] = next_adv;
    out.returns[t] = next_adv + values[t];
  }
  return out;
}

void normalize_advantages(Eigen::VectorXd& advantages) {
  const auto n = advantages.size();
  if (n == 0) return;
  const double mean = advantages.mean();
  advantages.array() -= mean;
  const double var = advantages.squaredNorm() / static_cast<double>(n);
  const double std = std::sqrt(var);
  if (n < 2 || std < 1e-12) {
    advantages.setZero();
    return;
  }
  advantages /= std;
}

}  // namespace lcpo
