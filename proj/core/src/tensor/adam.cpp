#include "lcpo/tensor/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace lcpo {

Adam::Adam(AdamConfig config, int param_count) : config_(config) {
  if (param_count <= 0) throw std::invalid_argument("Adam: param_count must be positive");
  m_.setZero(param_count);
  v_.setZero(param_count);
}

void Adam::step(ParamVector& params, const ParamVector& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("Adam: size mismatch");
  if (!all_finite(grad)) throw std::runtime_error("Adam: non-finite gradient");
  ++t_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_.array().matrix() + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const ParamVector m_hat = m_ / bc1;
  const ParamVector v_hat = v_ / bc2;
  params -= config_.lr * (m_hat.array() / (v_hat.array().sqrt() + config_.eps)).matrix();
  if (config_.weight_decay > 0.0) params *= 1.0 - config_.lr * config_.weight_decay;
}

void Adam::reset() {
  m_.setZero();
  v_.setZero();
  t_ = 0;
}

void Adam::restore(uint64_t t, const ParamVector& m, const ParamVector& v) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw std::invalid_argument("Adam: restore size mismatch");
  t_ = t;
  m_ = m;
  v_ = v;
}

}  // namespace lcpo
