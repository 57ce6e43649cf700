#include "lcpo/harness/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lcpo/envs/gridworld.hpp"
#include "lcpo/envs/pendulum.hpp"
#include "lcpo/envs/straggler.hpp"

namespace lcpo {

namespace {

using nlohmann::json;

TraceKind trace_kind_of(const std::string& s) {
  if (s == "ou" || s == "ornstein_uhlenbeck") return TraceKind::OrnsteinUhlenbeck;
  if (s == "piecewise_gaussian") return TraceKind::PiecewiseGaussian;
  if (s == "handcrafted") return TraceKind::HandCrafted;
  if (s == "file" || s == "workload_file") return TraceKind::WorkloadFile;
  throw ConfigError("unknown trace kind '" + s + "'");
}

std::string trace_kind_name(TraceKind k) {
  switch (k) {
    case TraceKind::OrnsteinUhlenbeck: return "ou";
    case TraceKind::PiecewiseGaussian: return "piecewise_gaussian";
    case TraceKind::HandCrafted: return "handcrafted";
    case TraceKind::WorkloadFile: return "file";
  }
  return "ou";
}

Eigen::VectorXd vector_of(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

json to_json_array(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

void parse_trace(const json& j, TraceSpec& t) {
  if (j.contains("kind")) t.kind = trace_kind_of(j["kind"].get<std::string>());
  t.dims = j.value("dims", t.dims);
  t.seed = j.value("seed", t.seed);
  t.ou_theta = j.value("ou_theta", t.ou_theta);
  t.ou_sigma = j.value("ou_sigma", t.ou_sigma);
  t.ou_dt = j.value("ou_dt", t.ou_dt);
  if (j.contains("ou_mu")) t.ou_mu = vector_of(j["ou_mu"]);
  t.segment_len = j.value("segment_len", t.segment_len);
  t.pg_mu_lo = j.value("pg_mu_lo", t.pg_mu_lo);
  t.pg_mu_hi = j.value("pg_mu_hi", t.pg_mu_hi);
  t.pg_sigma_lo = j.value("pg_sigma_lo", t.pg_sigma_lo);
  t.pg_sigma_hi = j.value("pg_sigma_hi", t.pg_sigma_hi);
  t.waveform = j.value("waveform", t.waveform);
  t.period = j.value("period", t.period);
  if (j.contains("offsets")) t.offsets = vector_of(j["offsets"]);
  if (j.contains("amplitudes")) t.amplitudes = vector_of(j["amplitudes"]);
  t.noise_sigma = j.value("noise_sigma", t.noise_sigma);
  t.clamp_min = j.value("clamp_min", t.clamp_min);
  t.file = j.value("file", t.file);
}

json trace_to_json(const TraceSpec& t) {
  json j;
  j["kind"] = trace_kind_name(t.kind);
  j["dims"] = t.dims;
  j["seed"] = t.seed;
  j["ou_theta"] = t.ou_theta;
  j["ou_sigma"] = t.ou_sigma;
  j["ou_dt"] = t.ou_dt;
  if (t.ou_mu.size() > 0) j["ou_mu"] = to_json_array(t.ou_mu);
  j["segment_len"] = t.segment_len;
  j["pg_mu_lo"] = t.pg_mu_lo;
  j["pg_mu_hi"] = t.pg_mu_hi;
  j["pg_sigma_lo"] = t.pg_sigma_lo;
  j["pg_sigma_hi"] = t.pg_sigma_hi;
  j["waveform"] = t.waveform;
  j["period"] = t.period;
  if (t.offsets.size() > 0) j["offsets"] = to_json_array(t.offsets);
  if (t.amplitudes.size() > 0) j["amplitudes"] = to_json_array(t.amplitudes);
  j["noise_sigma"] = t.noise_sigma;
  j["clamp_min"] = t.clamp_min;
  if (!t.file.empty()) j["file"] = t.file;
  return j;
}

void parse_agent(const json& j, AgentSpec& a) {
  a.kind = j.value("kind", a.kind);
  a.obs_dim = j.value("obs_dim", a.obs_dim);
  a.n_actions = j.value("n_actions", a.n_actions);
  a.feature_dim = j.value("feature_dim", a.feature_dim);
  if (j.contains("actor_hidden")) a.actor_hidden = j["actor_hidden"].get<std::vector<int>>();
  if (j.contains("critic_hidden")) a.critic_hidden = j["critic_hidden"].get<std::vector<int>>();
  a.lr_actor = j.value("lr_actor", a.lr_actor);
  a.lr_critic = j.value("lr_critic", a.lr_critic);
  a.weight_decay = j.value("weight_decay", a.weight_decay);
  a.gamma = j.value("gamma", a.gamma);
  a.lambda = j.value("lambda", a.lambda);
  a.entropy_base = j.value("entropy_base", a.entropy_base);
  a.entropy_target = j.value("entropy_target", a.entropy_target);
  a.tuner_lr = j.value("tuner_lr", a.tuner_lr);
  a.trpo_stepsize = j.value("trpo_stepsize", a.trpo_stepsize);
  a.batch_size = j.value("batch_size", a.batch_size);
  a.polyak = j.value("polyak", a.polyak);
  a.random_period = j.value("random_period", a.random_period);
  a.eps_anneal = j.value("eps_anneal", a.eps_anneal);
  a.tabular_lr_actor = j.value("tabular_lr_actor", a.tabular_lr_actor);
  a.tabular_lr_critic = j.value("tabular_lr_critic", a.tabular_lr_critic);
  if (j.contains("constraint")) {
    const json& c = j["constraint"];
    a.constraint.c_anchor = c.value("c_anchor", a.constraint.c_anchor);
    a.constraint.c_recent = c.value("c_recent", a.constraint.c_recent);
    a.constraint.damping = c.value("damping", a.constraint.damping);
    a.constraint.cg_iters = c.value("cg_iters", a.constraint.cg_iters);
    a.constraint.backtrack_max = c.value("backtrack_max", a.constraint.backtrack_max);
  }
  if (j.contains("ppo")) {
    const json& p = j["ppo"];
    a.ppo.clip = p.value("clip", a.ppo.clip);
    a.ppo.max_iters = p.value("max_iters", a.ppo.max_iters);
    a.ppo.max_kl = p.value("max_kl", a.ppo.max_kl);
    a.ppo.kappa = p.value("kappa", a.ppo.kappa);
  }
  if (j.contains("ood")) {
    const json& o = j["ood"];
    if (o.contains("kind")) {
      const std::string k = o["kind"].get<std::string>();
      if (k == "l2") a.ood.kind = OodKind::L2;
      else if (k == "mahalanobis") a.ood.kind = OodKind::Mahalanobis;
      else throw ConfigError("unknown ood kind '" + k + "'");
    }
    a.ood.l2_threshold = o.value("l2_threshold", a.ood.l2_threshold);
    a.ood.mahala_threshold = o.value("mahala_threshold", a.ood.mahala_threshold);
    a.ood.minibatch = o.value("minibatch", a.ood.minibatch);
    a.ood.covariance_ridge = o.value("covariance_ridge", a.ood.covariance_ridge);
  }
}

json agent_to_json(const AgentSpec& a) {
  json j;
  j["kind"] = a.kind;
  j["obs_dim"] = a.obs_dim;
  j["n_actions"] = a.n_actions;
  j["feature_dim"] = a.feature_dim;
  j["actor_hidden"] = a.actor_hidden;
  j["critic_hidden"] = a.critic_hidden;
  j["lr_actor"] = a.lr_actor;
  j["lr_critic"] = a.lr_critic;
  j["weight_decay"] = a.weight_decay;
  j["gamma"] = a.gamma;
  j["lambda"] = a.lambda;
  j["entropy_base"] = a.entropy_base;
  j["entropy_target"] = a.entropy_target;
  j["tuner_lr"] = a.tuner_lr;
  j["trpo_stepsize"] = a.trpo_stepsize;
  j["batch_size"] = a.batch_size;
  j["polyak"] = a.polyak;
  j["random_period"] = a.random_period;
  j["eps_anneal"] = a.eps_anneal;
  j["tabular_lr_actor"] = a.tabular_lr_actor;
  j["tabular_lr_critic"] = a.tabular_lr_critic;
  j["constraint"] = {{"c_anchor", a.constraint.c_anchor},
                     {"c_recent", a.constraint.c_recent},
                     {"damping", a.constraint.damping},
                     {"cg_iters", a.constraint.cg_iters},
                     {"backtrack_max", a.constraint.backtrack_max}};
  j["ppo"] = {{"clip", a.ppo.clip},
              {"max_iters", a.ppo.max_iters},
              {"max_kl", a.ppo.max_kl},
              {"kappa", a.ppo.kappa}};
  j["ood"] = {{"kind", a.ood.kind == OodKind::L2 ? "l2" : "mahalanobis"},
              {"l2_threshold", a.ood.l2_threshold},
              {"mahala_threshold", a.ood.mahala_threshold},
              {"minibatch", a.ood.minibatch},
              {"covariance_ridge", a.ood.covariance_ridge}};
  return j;
}

}  // namespace

void ExperimentConfig::finalize() {
  if (env == "gridworld") {
    agent.obs_dim = GridWorld::kObsDim;
    agent.n_actions = GridWorld::kActions;
    agent.feature_dim = GridWorld::kFeatureLen;
    agent.tabular_states = 9;
    agent.tabular_inputs = 2;
    if (rollout_len != 0)
      throw ConfigError("gridworld epochs are single episodes; omit rollout_len");
  } else if (env == "pendulum") {
    agent.obs_dim = WindyPendulum::kObsDim;
    agent.n_actions = WindyPendulum::kActions;
    agent.feature_dim = WindyPendulum::kFeatureLen;
    if (trace.dims != 2) throw ConfigError("pendulum traces carry (wind_x, wind_y): dims must be 2");
  } else if (env == "straggler") {
    agent.obs_dim = StragglerSim::kObsDim;
    agent.n_actions = StragglerSim::kActions;
    agent.feature_dim = StragglerSim::kFeatureLen;
    if (trace.dims != 2)
      throw ConfigError("straggler traces carry (arrival_rate, mean_service_ms): dims must be 2");
  } else {
    throw ConfigError("unknown env '" + env + "'");
  }
  if (env != "gridworld" && rollout_len <= 0)
    throw ConfigError("rollout_len must be positive for " + env);
  if (mode != "online" && mode != "offline")
    throw ConfigError("mode must be online or offline, got '" + mode + "'");
  if (total_epochs <= 0) throw ConfigError("total_epochs must be positive");
  if (grace_epochs < 0 || grace_epochs >= total_epochs)
    throw ConfigError("grace_epochs must lie in [0, total_epochs)");
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (eval_episodes < 0) throw ConfigError("eval_episodes must be non-negative");
  if (trace_length < 0) throw ConfigError("trace_length must be non-negative");
  if (probe && env != "gridworld") throw ConfigError("probes are defined for gridworld only");
  if (trace.kind == TraceKind::WorkloadFile && !std::filesystem::exists(trace.file))
    throw ConfigError("trace file does not exist: " + trace.file);
  try {
    trace.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("trace: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.name = j.value("name", cfg.name);
    cfg.env = j.value("env", cfg.env);
    cfg.mode = j.value("mode", cfg.mode);
    cfg.total_epochs = j.value("total_epochs", cfg.total_epochs);
    cfg.grace_epochs = j.value("grace_epochs", cfg.grace_epochs);
    cfg.rollout_len = j.value("rollout_len", cfg.rollout_len);
    cfg.eval_episodes = j.value("eval_episodes", cfg.eval_episodes);
    cfg.trace_length = j.value("trace_length", cfg.trace_length);
    cfg.probe = j.value("probe", cfg.probe);
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<uint64_t>>();
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.save_checkpoint = j.value("save_checkpoint", cfg.save_checkpoint);
    cfg.save_store = j.value("save_store", cfg.save_store);
    cfg.straggler_sigma_log = j.value("straggler_sigma_log", cfg.straggler_sigma_log);
    if (j.contains("agent")) parse_agent(j["agent"], cfg.agent);
    if (j.contains("trace")) parse_trace(j["trace"], cfg.trace);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  cfg.finalize();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["env"] = cfg.env;
  j["mode"] = cfg.mode;
  j["total_epochs"] = cfg.total_epochs;
  j["grace_epochs"] = cfg.grace_epochs;
  j["rollout_len"] = cfg.rollout_len;
  j["eval_episodes"] = cfg.eval_episodes;
  j["trace_length"] = cfg.trace_length;
  j["probe"] = cfg.probe;
  j["seeds"] = cfg.seeds;
  j["out_dir"] = cfg.out_dir;
  j["save_checkpoint"] = cfg.save_checkpoint;
  j["save_store"] = cfg.save_store;
  j["straggler_sigma_log"] = cfg.straggler_sigma_log;
  j["agent"] = agent_to_json(cfg.agent);
  j["trace"] = trace_to_json(cfg.trace);
  return j.dump(2) + "\n";
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config echo: " + path);
  out << config_to_json(cfg);
}

}  // namespace lcpo
