#include "lcpo/agents/replay.hpp"

#include <stdexcept>

namespace lcpo {

ReplaySample ReplayBuffer::sample(int batch_size, Rng& rng) const {
  if (data_.empty()) throw std::logic_error("ReplayBuffer::sample: buffer is empty");
  if (batch_size <= 0) throw std::invalid_argument("ReplayBuffer::sample: batch_size must be positive");
  const auto obs_dim = data_[0].obs.cols();
  ReplaySample s;
  s.obs.resize(batch_size, obs_dim);
  s.next_obs.resize(batch_size, obs_dim);
  s.actions.resize(batch_size);
  s.rewards.resize(batch_size);
  s.dones.resize(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const auto& t = data_[rng.uniform_int(static_cast<int>(data_.size()))];
    s.obs.row(i) = t.obs;
    s.next_obs.row(i) = t.next_obs;
    s.actions[i] = t.action;
    s.rewards[i] = t.reward;
    s.dones[i] = t.done;
  }
  return s;
}

}  // namespace lcpo
