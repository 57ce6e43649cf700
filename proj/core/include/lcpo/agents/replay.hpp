#pragma once

#include <cstdint>
#include <vector>

#include "lcpo/agents/rollout.hpp"
#include "lcpo/util/rng.hpp"

namespace lcpo {

struct ReplaySample {
  Matrix2D obs;
  Matrix2D next_obs;
  std::vector<int> actions;
  Eigen::VectorXd rewards;
  std::vector<bool> dones;
};

// Unbounded uniform-replay store for the off-policy baselines. Growth is
// amortized; the whole run's history fits comfortably in memory at the batch
// sizes used here.
class ReplayBuffer {
 public:
  void add(const Transition& t) { data_.push_back(t); }

  int64_t size() const { return static_cast<int64_t>(data_.size()); }

  // batch_size uniform draws with replacement; throws if the buffer is empty.
  ReplaySample sample(int batch_size, Rng& rng) const;

 private:
  std::vector<Transition> data_;
};

}  // namespace lcpo
