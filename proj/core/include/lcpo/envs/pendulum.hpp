#pragma once

#include "lcpo/tensor/matrix.hpp"
#include "lcpo/util/rng.hpp"

namespace lcpo {

// Classic-control pendulum (g = 10, m = 1, l = 1, dt = 0.05) with the torque
// range [-2, 2] discretized into 15 atoms, plus an external 2-D wind force
// applied at the tip: tau_wind = l (w_x cos th - w_y sin th). Observations
// are (cos th, sin th, thdot) followed by the three most recent wind
// vectors; the wind slice is the exogenous input feature.
class WindyPendulum {
 public:
  static constexpr int kObsDim = 9;
  static constexpr int kActions = 15;
  static constexpr int kFeatureOffset = 3;
  static constexpr int kFeatureLen = 6;
  static constexpr int kMaxSteps = 200;

  void reset(Rng& rng);
  Eigen::RowVectorXd observe() const;

  struct StepResult {
    double reward = 0.0;
    bool done = false;  // truncation only; the task has no terminal state
  };
  StepResult step(int action, double wind_x, double wind_y);

  static double torque_of(int action);

  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }

 private:
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
  Eigen::RowVectorXd wind_history_ = Eigen::RowVectorXd::Zero(6);  // newest first
  int steps_ = 0;
};

}  // namespace lcpo
