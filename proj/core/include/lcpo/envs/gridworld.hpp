#pragma once

#include <cstdint>

#include "lcpo/tensor/matrix.hpp"

namespace lcpo {

enum class GridMode { NoTrap = 0, TrapActive = 1 };

// 3x3 grid with the start at the bottom-center, the exit one cell above the
// top-center (a third Up from the start exits), and a trap on the center
// cell that costs an extra -10 when active. Every step costs -1; episodes
// truncate after 20 steps. Best returns: -3 straight up (NoTrap), -5 via
// the left detour (TrapActive).
class GridWorld {
 public:
  static constexpr int kObsDim = 11;  // 9 one-hot cells + 2 one-hot mode
  static constexpr int kActions = 4;  // Up, Down, Left, Right
  static constexpr int kFeatureOffset = 9;
  static constexpr int kFeatureLen = 2;
  static constexpr int kMaxSteps = 20;

  void reset(GridMode mode);
  Eigen::RowVectorXd observe() const;

  struct StepResult {
    double reward = 0.0;
    bool done = false;
  };
  StepResult step(int action);

  bool done() const { return done_; }
  int row() const { return row_; }
  int col() const { return col_; }
  GridMode mode() const { return mode_; }

  // Observation of an arbitrary (cell, mode) pair, for policy probes.
  static Eigen::RowVectorXd probe_obs(int row, int col, GridMode mode);

 private:
  int row_ = 2;
  int col_ = 1;
  GridMode mode_ = GridMode::NoTrap;
  int steps_ = 0;
  bool done_ = false;
};

// Piecewise-constant input schedule: NoTrap for [0, 4000), TrapActive for
// [4000, 16000), NoTrap afterwards.
GridMode gridworld_mode_schedule(int64_t epoch);

}  // namespace lcpo
