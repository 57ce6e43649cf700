#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "lcpo/agents/agent.hpp"

namespace lcpo {

// One metrics line per epoch. Kept flat and numeric so files from different
// agents/envs share one schema and diff cleanly.
struct MetricRow {
  int64_t epoch = 0;
  int64_t samples = 0;  // cumulative environment steps
  double reward = 0.0;  // mean return of episodes finished this epoch (or mean window reward)
  double p95_ms = 0.0;  // straggler: mean window p95 latency over the epoch
  double entropy = 0.0;
  double alpha = 0.0;
  double epsilon = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  int64_t anchor_count = 0;
  int64_t store_size = 0;
  double v_pg_norm = 0.0;
  double kl_anchor_pred = 0.0;
  double kl_anchor_real = 0.0;
  double kl_recent_real = 0.0;
  int64_t halvings = 0;
  int64_t ppo_iters = 0;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  int64_t fallback = 0;
  int64_t solver_step = 0;
  int64_t accepted = 1;
  int64_t updated = 0;

  static const std::vector<std::string>& columns();
  std::vector<double> values() const;
  void apply(const UpdateStats& s);
};

// Deterministic CSV writer: fixed column order, %.17g doubles, '\n' line
// ends — identical inputs produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  void write_row(const std::vector<double>& values);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  size_t n_columns_;
};

struct CsvTable {
  std::vector<std::string> columns;
  Matrix2D data;

  Eigen::Index column(const std::string& name) const;  // throws if missing
};

CsvTable read_csv(const std::string& path);

}  // namespace lcpo
