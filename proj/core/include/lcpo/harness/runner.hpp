#pragma once

#include <limits>
#include <string>
#include <vector>

#include "lcpo/agents/agent.hpp"
#include "lcpo/harness/config.hpp"

namespace lcpo {

struct RunPaths {
  std::string dir;
  std::string config_echo;
  std::string metrics;
  std::string probe;
  std::string eval;
  std::string checkpoint;
  std::string store;
};

RunPaths run_paths(const ExperimentConfig& cfg, uint64_t seed);

struct RunResult {
  uint64_t seed = 0;
  int64_t epochs = 0;
  int64_t samples = 0;
  double post_grace_reward_mean = 0.0;
  double post_grace_p95_mean = 0.0;
  double eval_mean = std::numeric_limits<double>::quiet_NaN();
  RunPaths paths;
};

// Trains one seed to completion and writes metrics (one row per epoch),
// optional probes, the final checkpoint, and — in offline mode or when
// eval_episodes > 0 — a greedy evaluation pass. Fully deterministic in
// (config, seed): two invocations produce byte-identical artifacts.
RunResult run_experiment(const ExperimentConfig& cfg, uint64_t seed);

std::vector<RunResult> run_all_seeds(const ExperimentConfig& cfg);

// P(Up) at the grid-world decision cell, NoTrap and TrapActive variants.
std::vector<double> gridworld_probe(Agent& agent);

}  // namespace lcpo
