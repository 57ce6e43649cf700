#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcpo/agents/factory.hpp"
#include "lcpo/envs/trace.hpp"

namespace lcpo {

// Anything wrong with the experiment description (unparseable file, unknown
// keys' values, impossible combinations) — the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string env;              // gridworld | pendulum | straggler
  std::string mode = "online";  // online | offline
  int64_t total_epochs = 0;
  int64_t grace_epochs = 0;
  // Steps collected per epoch; 0 means one episode per epoch (grid-world).
  int rollout_len = 0;
  int eval_episodes = 0;  // greedy evaluation episodes after training
  // Exogenous trace rows to generate; 0 derives the span the run consumes.
  int64_t trace_length = 0;
  bool probe = false;  // per-epoch policy probes (grid-world)
  std::vector<uint64_t> seeds{0};
  std::string out_dir = "runs/out";
  bool save_checkpoint = true;
  bool save_store = false;  // experience-store snapshot alongside metrics
  double straggler_sigma_log = 0.8;
  AgentSpec agent;
  TraceSpec trace;

  // Env-derived dimensions are filled in; throws ConfigError on conflicts.
  void finalize();
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::string& path);

}  // namespace lcpo
