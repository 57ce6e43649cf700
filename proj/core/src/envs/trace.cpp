#include "lcpo/envs/trace.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace lcpo {
namespace {

Eigen::VectorXd sized_or(const Eigen::VectorXd& v, int dims, double fill) {
  if (v.size() == 0) return Eigen::VectorXd::Constant(dims, fill);
  if (v.size() != dims) throw std::invalid_argument("TraceSpec: per-dim vector length mismatch");
  return v;
}

}  // namespace

void TraceSpec::validate() const {
  if (dims <= 0) throw std::invalid_argument("TraceSpec: dims must be positive");
  switch (kind) {
    case TraceKind::OrnsteinUhlenbeck:
      if (ou_theta <= 0.0 || ou_sigma < 0.0 || ou_dt <= 0.0)
        throw std::invalid_argument("TraceSpec: bad OU parameters");
      break;
    case TraceKind::PiecewiseGaussian:
      if (segment_len <= 0 || pg_sigma_lo < 0.0 || pg_sigma_hi < pg_sigma_lo ||
          pg_mu_hi < pg_mu_lo)
        throw std::invalid_argument("TraceSpec: bad piecewise-Gaussian parameters");
      break;
    case TraceKind::HandCrafted:
      if (period <= 0.0 || noise_sigma < 0.0)
        throw std::invalid_argument("TraceSpec: bad hand-crafted parameters");
      if (waveform != "square" && waveform != "sine")
        throw std::invalid_argument("TraceSpec: unknown waveform " + waveform);
      break;
    case TraceKind::WorkloadFile:
      if (file.empty()) throw std::invalid_argument("TraceSpec: workload file missing");
      break;
    default:
      throw std::invalid_argument("TraceSpec: unknown kind");
  }
}

Matrix2D generate_trace(const TraceSpec& spec, int64_t length) {
  spec.validate();
  if (length <= 0) throw std::invalid_argument("generate_trace: length must be positive");
  Rng rng(spec.seed);
  Matrix2D out(length, spec.dims);

  switch (spec.kind) {
    case TraceKind::OrnsteinUhlenbeck: {
      const Eigen::VectorXd mu = sized_or(spec.ou_mu, spec.dims, 0.0);
      const double root_dt = std::sqrt(spec.ou_dt);
      Eigen::VectorXd w = mu;
      for (int64_t t = 0; t < length; ++t) {
        for (int d = 0; d < spec.dims; ++d) {
          w(d) += spec.ou_theta * (mu(d) - w(d)) * spec.ou_dt +
                  spec.ou_sigma * root_dt * rng.normal();
        }
        out.row(t) = w;
      }
      break;
    }
    case TraceKind::PiecewiseGaussian: {
      Eigen::VectorXd mu(spec.dims), sigma(spec.dims);
      for (int64_t t = 0; t < length; ++t) {
        if (t % spec.segment_len == 0) {
          for (int d = 0; d < spec.dims; ++d) {
            mu(d) = rng.uniform(spec.pg_mu_lo, spec.pg_mu_hi);
            sigma(d) = rng.uniform(spec.pg_sigma_lo, spec.pg_sigma_hi);
          }
        }
        for (int d = 0; d < spec.dims; ++d) out(t, d) = rng.normal(mu(d), sigma(d));
      }
      break;
    }
    case TraceKind::HandCrafted: {
      const Eigen::VectorXd offsets = sized_or(spec.offsets, spec.dims, 0.0);
      const Eigen::VectorXd amplitudes = sized_or(spec.amplitudes, spec.dims, 1.0);
      const bool square = spec.waveform == "square";
      for (int64_t t = 0; t < length; ++t) {
        const double phase = static_cast<double>(t) / spec.period;
        const double base =
            square ? (std::fmod(phase, 1.0) < 0.5 ? 1.0 : -1.0) : std::sin(2.0 * M_PI * phase);
        for (int d = 0; d < spec.dims; ++d)
          out(t, d) = offsets(d) + amplitudes(d) * base + rng.normal(0.0, spec.noise_sigma);
      }
      break;
    }
    case TraceKind::WorkloadFile: {
      const Matrix2D loaded = load_trace_csv(spec.file);
      if (loaded.cols() != spec.dims)
        throw std::runtime_error("generate_trace: workload file column count mismatch");
      if (loaded.rows() < length)
        throw std::runtime_error("generate_trace: workload file shorter than requested length");
      out = loaded.topRows(length);
      break;
    }
  }
  if (spec.clamp_min > -1e299) out = out.cwiseMax(spec.clamp_min);
  return out;
}

Matrix2D load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_trace_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> row;
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() < 2) throw std::runtime_error("load_trace_csv: need `t,value...` columns");
    if (!rows.empty() && rows.front().size() != row.size())
      throw std::runtime_error("load_trace_csv: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_trace_csv: empty file " + path);
  Matrix2D out(static_cast<Eigen::Index>(rows.size()),
               static_cast<Eigen::Index>(rows.front().size() - 1));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 1; j < rows[i].size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = rows[i][j];
  return out;
}

void save_trace_csv(const std::string& path, const Matrix2D& values, double step) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_trace_csv: cannot open " + path);
  out.precision(10);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << static_cast<double>(i) * step;
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << values(i, j);
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_trace_csv: write failed");
}

}  // namespace lcpo
