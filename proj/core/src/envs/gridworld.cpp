#include "lcpo/envs/gridworld.hpp"

#include <stdexcept>

namespace lcpo {

void GridWorld::reset(GridMode mode) {
  row_ = 2;
  col_ = 1;
  mode_ = mode;
  steps_ = 0;
  done_ = false;
}

Eigen::RowVectorXd GridWorld::probe_obs(int row, int col, GridMode mode) {
  Eigen::RowVectorXd obs = Eigen::RowVectorXd::Zero(kObsDim);
  obs(row * 3 + col) = 1.0;
  obs(kFeatureOffset + static_cast<int>(mode)) = 1.0;
  return obs;
}

Eigen::RowVectorXd GridWorld::observe() const { return probe_obs(row_, col_, mode_); }

GridWorld::StepResult GridWorld::step(int action) {
  if (done_) throw std::logic_error("GridWorld: step after episode end");
  if (action < 0 || action >= kActions) throw std::out_of_range("GridWorld: bad action");
  ++steps_;
  StepResult res;
  res.reward = -1.0;

  int r = row_, c = col_;
  switch (action) {
    case 0: --r; break;  // Up
    case 1: ++r; break;  // Down
    case 2: --c; break;  // Left
    case 3: ++c; break;  // Right
  }
  if (r == -1 && c == 1) {  // exit above the top-center cell
    done_ = true;
    res.done = true;
    return res;
  }
  if (r >= 0 && r < 3 && c >= 0 && c < 3) {  // walls block, no move otherwise
    row_ = r;
    col_ = c;
    if (row_ == 1 && col_ == 1 && mode_ == GridMode::TrapActive) res.reward -= 10.0;
  }
  if (steps_ >= kMaxSteps) {
    done_ = true;  // truncation
  }
  res.done = done_;
  return res;
}

GridMode gridworld_mode_schedule(int64_t epoch) {
  return (epoch >= 4000 && epoch < 16000) ? GridMode::TrapActive : GridMode::NoTrap;
}

}  // namespace lcpo
