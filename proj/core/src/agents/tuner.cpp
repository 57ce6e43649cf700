#include "lcpo/agents/tuner.hpp"

#include <algorithm>
#include <cmath>

namespace lcpo {

double EntropyTuner::alpha() const {
  return std::clamp(base_ * std::exp(log_alpha_), 1e-6, 10.0);
}

double EntropyTuner::update(double measured_entropy) {
  log_alpha_ += lr_ * (target_ - measured_entropy);
  return alpha();
}

}  // namespace lcpo
