#pragma once

#include <cstdint>
#include <string>

#include "lcpo/tensor/matrix.hpp"
#include "lcpo/util/rng.hpp"

namespace lcpo {

enum class TraceKind { OrnsteinUhlenbeck, PiecewiseGaussian, HandCrafted, WorkloadFile };

// Exogenous input process generator. Output is (length x dims); every kind
// is fully reproducible from (spec, seed).
struct TraceSpec {
  TraceKind kind = TraceKind::OrnsteinUhlenbeck;
  int dims = 2;
  uint64_t seed = 0;

  // OrnsteinUhlenbeck: w += theta (mu - w) dt + sigma sqrt(dt) xi
  double ou_theta = 0.5;
  double ou_sigma = 1.0;
  double ou_dt = 0.05;
  Eigen::VectorXd ou_mu;  // defaults to zeros(dims)

  // PiecewiseGaussian: per segment, each dim draws mu ~ U(mu_lo, mu_hi) and
  // sigma ~ U(sigma_lo, sigma_hi); values are i.i.d. N(mu, sigma) within it.
  int64_t segment_len = 2000;
  double pg_mu_lo = -1.0, pg_mu_hi = 1.0;
  double pg_sigma_lo = 0.05, pg_sigma_hi = 0.3;

  // HandCrafted: offset + amplitude * waveform(t / period) + N(0, noise),
  // per dim (square: +-1 on half periods; sine).
  std::string waveform = "square";
  double period = 4000.0;
  Eigen::VectorXd offsets;     // defaults to zeros(dims)
  Eigen::VectorXd amplitudes;  // defaults to ones(dims)
  double noise_sigma = 0.05;
  double clamp_min = -1e300;  // workload traces clamp at small positives

  // WorkloadFile: CSV `t,value1[,value2]` loaded verbatim.
  std::string file;

  void validate() const;
};

Matrix2D generate_trace(const TraceSpec& spec, int64_t length);

// Trace CSV: header-free rows `t,value1[,value2,...]`; returns the value
// columns (time is implied by row index and the env's step resolution).
Matrix2D load_trace_csv(const std::string& path);
void save_trace_csv(const std::string& path, const Matrix2D& values, double step);

}  // namespace lcpo
