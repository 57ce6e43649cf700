#include "lcpo/harness/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

#include "lcpo/envs/gridworld.hpp"
#include "lcpo/envs/pendulum.hpp"
#include "lcpo/envs/straggler.hpp"
#include "lcpo/harness/metrics.hpp"
#include "lcpo/ood/store.hpp"

namespace lcpo {

namespace {

namespace fs = std::filesystem;

struct RunCtx {
  const ExperimentConfig& cfg;
  bool offline;
  Agent& agent;
  Rng env_rng;
  Rng act_rng;
  Rng offline_rng;
  Matrix2D trace;
  int64_t cursor = 0;  // online read position, advances one row per step
  CsvWriter metrics;
  std::optional<CsvWriter> probe_csv;
  int64_t samples = 0;
  double pg_reward_sum = 0.0;
  double pg_p95_sum = 0.0;
  int64_t pg_rows = 0;

  void finish_epoch(int64_t epoch, MetricRow& row) {
    row.epoch = epoch;
    row.samples = samples;
    metrics.write_row(row.values());
    if (epoch >= cfg.grace_epochs) {
      pg_reward_sum += row.reward;
      pg_p95_sum += row.p95_ms;
      ++pg_rows;
    }
  }
};

Transition make_transition(const Eigen::RowVectorXd& obs, const Eigen::RowVectorXd& next_obs,
                           int feature_offset, int feature_len, const ActResult& a,
                           double reward, bool done) {
  Transition t;
  t.obs = obs;
  t.next_obs = next_obs;
  t.input_features = obs.segment(feature_offset, feature_len);
  t.action = a.action;
  t.reward = reward;
  t.done = done;
  t.behavior_log_prob = a.log_prob;
  t.value_estimate = a.value;
  return t;
}

double run_one_gridworld_episode(GridWorld& env, GridMode mode, Agent& agent, Rng& act_rng,
                                 ActMode act_mode, bool learn, int64_t* samples) {
  env.reset(mode);
  Eigen::RowVectorXd obs = env.observe();
  double ep_return = 0.0;
  bool done = false;
  while (!done) {
    const ActResult a = agent.act(obs, act_mode, act_rng);
    const auto r = env.step(a.action);
    const Eigen::RowVectorXd next_obs = env.observe();
    if (learn) {
      agent.observe(make_transition(obs, next_obs, GridWorld::kFeatureOffset,
                                    GridWorld::kFeatureLen, a, r.reward, r.done));
      ++*samples;
    }
    ep_return += r.reward;
    obs = next_obs;
    done = r.done;
  }
  return ep_return;
}

void run_gridworld(RunCtx& c, RunResult& result) {
  GridWorld env;
  for (int64_t epoch = 0; epoch < c.cfg.total_epochs; ++epoch) {
    const GridMode mode = c.offline ? static_cast<GridMode>(c.offline_rng.uniform_int(2))
                                    : gridworld_mode_schedule(epoch);
    const double ep_return = run_one_gridworld_episode(env, mode, c.agent, c.act_rng,
                                                       ActMode::Explore, true, &c.samples);
    const UpdateStats s = c.agent.update(epoch);
    MetricRow row;
    row.apply(s);
    row.reward = ep_return;
    c.finish_epoch(epoch, row);
    if (c.probe_csv) {
      const std::vector<double> p = gridworld_probe(c.agent);
      c.probe_csv->write_row({static_cast<double>(epoch), p[0], p[1]});
    }
  }
  // Greedy evaluation: offline replays the canonical mode schedule; online
  // continues it past the training horizon.
  const int64_t eval_n = c.offline ? c.cfg.total_epochs : c.cfg.eval_episodes;
  if (eval_n > 0) {
    CsvWriter eval(result.paths.eval, {"episode", "return"});
    double sum = 0.0;
    for (int64_t i = 0; i < eval_n; ++i) {
      const GridMode mode =
          gridworld_mode_schedule(c.offline ? i : c.cfg.total_epochs + i);
      const double r =
          run_one_gridworld_episode(env, mode, c.agent, c.act_rng, ActMode::Greedy, false,
                                    nullptr);
      eval.write_row({static_cast<double>(i), r});
      sum += r;
    }
    result.eval_mean = sum / static_cast<double>(eval_n);
  }
}

void run_pendulum(RunCtx& c, RunResult& result) {
  WindyPendulum env;
  const int ep_len = WindyPendulum::kMaxSteps;
  const int64_t rows = c.trace.rows();

  bool need_reset = true;
  Eigen::RowVectorXd obs;
  double ep_return = 0.0;
  int64_t ep_start = 0, ep_step = 0;
  double last_reward_metric = 0.0;

  for (int64_t epoch = 0; epoch < c.cfg.total_epochs; ++epoch) {
    double reward_sum = 0.0;
    int episodes_done = 0;
    for (int k = 0; k < c.cfg.rollout_len; ++k) {
      if (need_reset) {
        env.reset(c.env_rng);
        obs = env.observe();
        ep_return = 0.0;
        ep_step = 0;
        if (c.offline)
          ep_start = c.offline_rng.uniform_int(static_cast<int>(rows - ep_len + 1));
        need_reset = false;
      }
      const int64_t trow = c.offline ? ep_start + ep_step : c.cursor;
      const ActResult a = c.agent.act(obs, ActMode::Explore, c.act_rng);
      const auto r = env.step(a.action, c.trace(trow, 0), c.trace(trow, 1));
      if (!c.offline) ++c.cursor;
      ++ep_step;
      const Eigen::RowVectorXd next_obs = env.observe();
      c.agent.observe(make_transition(obs, next_obs, WindyPendulum::kFeatureOffset,
                                      WindyPendulum::kFeatureLen, a, r.reward, r.done));
      ++c.samples;
      ep_return += r.reward;
      obs = next_obs;
      if (r.done) {
        reward_sum += ep_return;
        ++episodes_done;
        need_reset = true;
      }
    }
    const UpdateStats s = c.agent.update(epoch);
    MetricRow row;
    row.apply(s);
    if (episodes_done > 0)
      last_reward_metric = reward_sum / static_cast<double>(episodes_done);
    row.reward = last_reward_metric;
    c.finish_epoch(epoch, row);
  }

  // Greedy evaluation. Offline replays the full trace front to back; online
  // continues from the training cursor (the auto-sized trace covers it).
  int64_t eval_n = c.cfg.eval_episodes;
  int64_t eval_cursor = c.cursor;
  if (c.offline) {
    eval_n = rows / ep_len;
    eval_cursor = 0;
  }
  if (eval_n > 0) {
    CsvWriter eval(result.paths.eval, {"episode", "return"});
    double sum = 0.0;
    for (int64_t i = 0; i < eval_n; ++i) {
      env.reset(c.env_rng);
      Eigen::RowVectorXd eobs = env.observe();
      double eret = 0.0;
      for (int k = 0; k < ep_len; ++k) {
        const ActResult a = c.agent.act(eobs, ActMode::Greedy, c.act_rng);
        const auto r = env.step(a.action, c.trace(eval_cursor, 0), c.trace(eval_cursor, 1));
        ++eval_cursor;
        eret += r.reward;
        eobs = env.observe();
        if (r.done) break;
      }
      eval.write_row({static_cast<double>(i), eret});
      sum += eret;
    }
    result.eval_mean = sum / static_cast<double>(eval_n);
  }
}

void run_straggler(RunCtx& c, RunResult& result) {
  StragglerSim sim(c.cfg.straggler_sigma_log);
  sim.reset(c.env_rng.raw());
  Eigen::RowVectorXd obs = sim.observe();
  const int64_t rows = c.trace.rows();

  for (int64_t epoch = 0; epoch < c.cfg.total_epochs; ++epoch) {
    double reward_sum = 0.0, p95_sum = 0.0;
    for (int k = 0; k < c.cfg.rollout_len; ++k) {
      const int64_t trow =
          c.offline ? c.offline_rng.uniform_int(static_cast<int>(rows)) : c.cursor;
      const ActResult a = c.agent.act(obs, ActMode::Explore, c.act_rng);
      const auto r = sim.step(a.action, c.trace(trow, 0), c.trace(trow, 1));
      if (!c.offline) ++c.cursor;
      const Eigen::RowVectorXd next_obs = sim.observe();
      c.agent.observe(make_transition(obs, next_obs, StragglerSim::kFeatureOffset,
                                      StragglerSim::kFeatureLen, a, r.reward, false));
      ++c.samples;
      reward_sum += r.reward;
      p95_sum += r.window_p95_ms;
      obs = next_obs;
    }
    const UpdateStats s = c.agent.update(epoch);
    MetricRow row;
    row.apply(s);
    row.reward = reward_sum / static_cast<double>(c.cfg.rollout_len);
    row.p95_ms = p95_sum / static_cast<double>(c.cfg.rollout_len);
    c.finish_epoch(epoch, row);
  }

  if (c.offline) {
    // Evaluation replay of the original trace on a fresh simulator.
    StragglerSim esim(c.cfg.straggler_sigma_log);
    esim.reset(c.env_rng.raw());
    Eigen::RowVectorXd eobs = esim.observe();
    CsvWriter eval(result.paths.eval, {"window", "reward", "p95_ms"});
    double sum = 0.0;
    for (int64_t w = 0; w < rows; ++w) {
      const ActResult a = c.agent.act(eobs, ActMode::Greedy, c.act_rng);
      const auto r = esim.step(a.action, c.trace(w, 0), c.trace(w, 1));
      eval.write_row({static_cast<double>(w), r.reward, r.window_p95_ms});
      sum += r.reward;
      eobs = esim.observe();
    }
    result.eval_mean = sum / static_cast<double>(rows);
  }
}

int64_t required_trace_rows(const ExperimentConfig& cfg) {
  if (cfg.env == "gridworld") return 0;
  const int64_t per_epoch = cfg.rollout_len;
  int64_t rows = cfg.total_epochs * per_epoch;
  if (cfg.env == "pendulum" && cfg.mode == "online")
    rows += static_cast<int64_t>(cfg.eval_episodes) * WindyPendulum::kMaxSteps;
  return rows;
}

}  // namespace

RunPaths run_paths(const ExperimentConfig& cfg, uint64_t seed) {
  RunPaths p;
  p.dir = cfg.out_dir;
  const std::string stem = cfg.out_dir + "/" + cfg.name;
  const std::string seed_stem = stem + "_seed" + std::to_string(seed);
  p.config_echo = stem + "_config.json";
  p.metrics = seed_stem + "_metrics.csv";
  p.probe = seed_stem + "_probe.csv";
  p.eval = seed_stem + "_eval.csv";
  p.checkpoint = seed_stem + "_agent.ckpt";
  p.store = seed_stem + "_store.bin";
  return p;
}

std::vector<double> gridworld_probe(Agent& agent) {
  const Eigen::VectorXd no_trap =
      agent.action_probs(GridWorld::probe_obs(2, 1, GridMode::NoTrap));
  const Eigen::VectorXd trap =
      agent.action_probs(GridWorld::probe_obs(2, 1, GridMode::TrapActive));
  return {no_trap[0], trap[0]};  // action 0 is Up
}

RunResult run_experiment(const ExperimentConfig& cfg, uint64_t seed) {
  RunResult result;
  result.seed = seed;
  result.paths = run_paths(cfg, seed);
  fs::create_directories(result.paths.dir);
  save_config(cfg, result.paths.config_echo);

  Rng master(seed);
  Rng env_rng = master.fork(1);
  Rng agent_init = master.fork(2);
  Rng act_rng = master.fork(3);
  Rng offline_rng = master.fork(4);

  std::unique_ptr<Agent> agent = make_agent(cfg.agent, agent_init);

  Matrix2D trace;
  const int64_t auto_rows = required_trace_rows(cfg);
  if (auto_rows > 0) {
    const int64_t rows = cfg.trace_length > 0 ? cfg.trace_length : auto_rows;
    if (cfg.mode == "online" && rows < auto_rows)
      throw ConfigError("trace_length shorter than the online run consumes");
    trace = generate_trace(cfg.trace, rows);
  }

  RunCtx c{cfg,
           cfg.mode == "offline",
           *agent,
           std::move(env_rng),
           std::move(act_rng),
           std::move(offline_rng),
           std::move(trace),
           0,
           CsvWriter(result.paths.metrics, MetricRow::columns()),
           std::nullopt,
           0,
           0.0,
           0.0,
           0};
  if (cfg.probe)
    c.probe_csv.emplace(result.paths.probe,
                        std::vector<std::string>{"epoch", "p_up_notrap", "p_up_trap"});

  if (cfg.env == "gridworld") run_gridworld(c, result);
  else if (cfg.env == "pendulum") run_pendulum(c, result);
  else run_straggler(c, result);

  result.epochs = cfg.total_epochs;
  result.samples = c.samples;
  if (c.pg_rows > 0) {
    result.post_grace_reward_mean = c.pg_reward_sum / static_cast<double>(c.pg_rows);
    result.post_grace_p95_mean = c.pg_p95_sum / static_cast<double>(c.pg_rows);
  }

  if (cfg.save_checkpoint) {
    std::ofstream out(result.paths.checkpoint, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + result.paths.checkpoint);
    agent->save(out);
  }
  if (cfg.save_store && agent->experience_store())
    agent->experience_store()->save(result.paths.store);
  return result;
}

std::vector<RunResult> run_all_seeds(const ExperimentConfig& cfg) {
  std::vector<RunResult> results;
  results.reserve(cfg.seeds.size());
  for (const uint64_t seed : cfg.seeds) results.push_back(run_experiment(cfg, seed));
  return results;
}

}  // namespace lcpo
