#pragma once

namespace lcpo {

// Slow multiplicative controller for the entropy coefficient: log_alpha
// integrates (target - measured) so alpha rises when the policy collapses
// below target entropy and decays once exploration is ample.
class EntropyTuner {
 public:
  EntropyTuner(double base_coeff, double target_entropy, double lr = 1e-3)
      : base_(base_coeff), target_(target_entropy), lr_(lr) {}

  // Current coefficient: base * exp(log_alpha), capped to [1e-6, 10].
  double alpha() const;

  // Integrates the gap and returns the post-update alpha.
  double update(double measured_entropy);

  double log_alpha() const { return log_alpha_; }
  void restore(double log_alpha) { log_alpha_ = log_alpha; }

 private:
  double base_;
  double target_;
  double lr_;
  double log_alpha_ = 0.0;
};

}  // namespace lcpo
