#include "lcpo/envs/pendulum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lcpo {
namespace {

constexpr double kG = 10.0, kM = 1.0, kL = 1.0, kDt = 0.05;
constexpr double kMaxSpeed = 8.0;

double angle_normalize(double x) {
  double m = std::fmod(x + M_PI, 2.0 * M_PI);
  if (m < 0) m += 2.0 * M_PI;
  return m - M_PI;
}

}  // namespace

double WindyPendulum::torque_of(int action) {
  if (action < 0 || action >= kActions) throw std::out_of_range("WindyPendulum: bad action");
  return -2.0 + static_cast<double>(action) * (4.0 / (kActions - 1));
}

void WindyPendulum::reset(Rng& rng) {
  theta_ = rng.uniform(-M_PI, M_PI);
  theta_dot_ = rng.uniform(-1.0, 1.0);
  wind_history_.setZero();
  steps_ = 0;
}

Eigen::RowVectorXd WindyPendulum::observe() const {
  Eigen::RowVectorXd obs(kObsDim);
  obs(0) = std::cos(theta_);
  obs(1) = std::sin(theta_);
  obs(2) = theta_dot_;
  obs.segment(kFeatureOffset, kFeatureLen) = wind_history_;
  return obs;
}

WindyPendulum::StepResult WindyPendulum::step(int action, double wind_x, double wind_y) {
  const double u = torque_of(action);
  StepResult res;
  const double th_norm = angle_normalize(theta_);
  res.reward = -(th_norm * th_norm + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u);

  const double tau_wind = kL * (wind_x * std::cos(theta_) - wind_y * std::sin(theta_));
  const double total = u + tau_wind;
  theta_dot_ += (3.0 * kG / (2.0 * kL) * std::sin(theta_) + 3.0 / (kM * kL * kL) * total) * kDt;
  theta_dot_ = std::clamp(theta_dot_, -kMaxSpeed, kMaxSpeed);
  theta_ += theta_dot_ * kDt;

  wind_history_.segment(2, 4) = wind_history_.segment(0, 4).eval();
  wind_history_(0) = wind_x;
  wind_history_(1) = wind_y;

  ++steps_;
  res.done = steps_ >= kMaxSteps;
  return res;
}

}  // namespace lcpo
