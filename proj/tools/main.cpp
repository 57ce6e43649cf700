// lcpo: train/evaluate agents from a JSON experiment config, aggregate
// per-seed metrics, and probe policies. Exit codes: 0 ok, 2 bad config or
// usage, 3 runtime failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "lcpo/envs/gridworld.hpp"
#include "lcpo/envs/straggler.hpp"
#include "lcpo/harness/runner.hpp"
#include "lcpo/harness/summarize.hpp"

namespace {

int cmd_run(const std::string& config_path, int64_t seed_override, const std::string& mode) {
  lcpo::ExperimentConfig cfg = lcpo::load_config(config_path);
  if (!mode.empty()) {
    cfg.mode = mode;
    cfg.finalize();
  }
  if (seed_override >= 0) cfg.seeds = {static_cast<uint64_t>(seed_override)};
  for (const auto& result : lcpo::run_all_seeds(cfg)) {
    std::printf("%s seed %llu: %lld epochs, %lld samples, post-grace reward %.4f",
                cfg.name.c_str(), static_cast<unsigned long long>(result.seed),
                static_cast<long long>(result.epochs), static_cast<long long>(result.samples),
                result.post_grace_reward_mean);
    if (cfg.env == "straggler")
      std::printf(", post-grace p95 %.3f ms", result.post_grace_p95_mean);
    if (std::isfinite(result.eval_mean)) std::printf(", eval %.4f", result.eval_mean);
    std::printf(" -> %s\n", result.paths.metrics.c_str());
  }
  return 0;
}

int cmd_probe(const std::string& config_path, const std::string& checkpoint) {
  lcpo::ExperimentConfig cfg = lcpo::load_config(config_path);
  lcpo::Rng master(cfg.seeds.front());
  master.fork(1);  // keep stream assignment identical to run_experiment
  lcpo::Rng agent_init = master.fork(2);
  auto agent = lcpo::make_agent(cfg.agent, agent_init);
  if (!checkpoint.empty()) {
    std::ifstream in(checkpoint, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + checkpoint);
    agent->load(in);
  }
  if (cfg.env == "gridworld") {
    const std::vector<double> p = lcpo::gridworld_probe(*agent);
    std::printf("p_up_notrap %.6f\np_up_trap %.6f\n", p[0], p[1]);
  } else {
    Eigen::RowVectorXd obs;
    if (cfg.env == "pendulum") {
      obs = Eigen::RowVectorXd::Zero(cfg.agent.obs_dim);
      obs[0] = 1.0;  // hanging still, no wind history
    } else {
      lcpo::StragglerSim sim(cfg.straggler_sigma_log);
      sim.reset(0);
      obs = sim.observe();
    }
    const Eigen::VectorXd p = agent->action_probs(obs);
    for (Eigen::Index i = 0; i < p.size(); ++i)
      std::printf("action %lld %.6f\n", static_cast<long long>(i), p[i]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual-RL benchmark runner"};
  app.require_subcommand(1);

  std::string config_path, mode, dir, checkpoint;
  int64_t seed = -1;

  CLI::App* run = app.add_subcommand("run", "Train all configured seeds of an experiment");
  run->add_option("--config", config_path, "Experiment JSON")->required();
  run->add_option("--seed", seed, "Run only this seed");
  run->add_option("--mode", mode, "Override the training protocol")
      ->check(CLI::IsMember({"online", "offline"}));

  CLI::App* summarize = app.add_subcommand("summarize", "Aggregate a results directory");
  summarize->add_option("dir", dir, "Directory with config echoes and metrics")->required();

  CLI::App* probe = app.add_subcommand("probe", "Print policy probe values");
  probe->add_option("--config", config_path, "Experiment JSON")->required();
  probe->add_option("--checkpoint", checkpoint, "Agent checkpoint to load");

  CLI::App* plots = app.add_subcommand("export-plots", "Write plot-ready per-epoch aggregates");
  plots->add_option("dir", dir, "Directory with config echoes and metrics")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, seed, mode);
    if (summarize->parsed()) {
      std::cout << lcpo::format_summary(lcpo::summarize_dir(dir));
      return 0;
    }
    if (probe->parsed()) return cmd_probe(config_path, checkpoint);
    if (plots->parsed()) {
      lcpo::export_plots(dir);
      return 0;
    }
  } catch (const lcpo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
