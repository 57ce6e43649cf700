#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace lcpo {

// mt19937_64 with hand-rolled sampling transforms so that draws are
// bit-reproducible across standard libraries (std::*_distribution is
// implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Derives an independent stream, e.g. one per component of a run.
  Rng fork(uint64_t stream) { return Rng(engine_() ^ (0x9e3779b97f4a7c15ULL * (stream + 1))); }

  uint64_t raw() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<int>(engine_() % static_cast<uint64_t>(n));
  }

  // Box-Muller; one value per call, no cached spare (keeps streams simple).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double exponential(double rate) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u) / rate;
  }

  double lognormal(double mu_log, double sigma_log) {
    return std::exp(mu_log + sigma_log * normal());
  }

  // Samples an index from an (unnormalized is fine) probability row.
  int categorical(std::span<const double> probs) {
    double total = 0.0;
    for (double p : probs) total += p;
    double r = uniform() * total;
    for (size_t i = 0; i < probs.size(); ++i) {
      r -= probs[i];
      if (r <= 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lcpo
