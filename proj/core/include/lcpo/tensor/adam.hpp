#pragma once

#include <cstdint>

#include "lcpo/tensor/matrix.hpp"

namespace lcpo {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled: applied to params, not the gradient
};

// Adam with decoupled weight decay. step() mutates params in place and
// rejects non-finite gradients so a single bad batch cannot poison the
// moment estimates.
class Adam {
 public:
  Adam(AdamConfig config, int param_count);

  void step(ParamVector& params, const ParamVector& grad);
  void reset();

  uint64_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const ParamVector& m() const { return m_; }
  const ParamVector& v() const { return v_; }
  void restore(uint64_t t, const ParamVector& m, const ParamVector& v);

 private:
  AdamConfig config_;
  ParamVector m_;
  ParamVector v_;
  uint64_t t_ = 0;
};

}  // namespace lcpo
