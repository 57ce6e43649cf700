#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lcpo {

struct SeedSummary {
  uint64_t seed = 0;
  int64_t epochs = 0;
  double post_grace_reward = 0.0;
  double post_grace_p95 = 0.0;
  double eval_mean = 0.0;
  bool has_eval = false;
};

struct ExperimentSummary {
  std::string name;
  std::string env;
  std::string agent_kind;
  std::string mode;
  int64_t grace_epochs = 0;
  std::vector<SeedSummary> seeds;
  // Means over seeds of the per-seed post-grace means.
  double reward_mean = 0.0;
  double p95_mean = 0.0;
  double eval_mean = 0.0;
  bool has_eval = false;
};

// Scans a results directory for config echoes and their per-seed metrics
// files. Hard error when seeds of one experiment disagree on epoch count.
std::vector<ExperimentSummary> summarize_dir(const std::string& dir);

std::string format_summary(const std::vector<ExperimentSummary>& rows);

// Per-epoch mean/min/max across seeds for reward (and p95/probe columns
// when present), written to <dir>/plots/<name>_<column>.csv.
void export_plots(const std::string& dir);

}  // namespace lcpo
