#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>
#include <vector>

#include "lcpo/agents/actor_critic.hpp"
#include "lcpo/agents/ddqn_agent.hpp"
#include "lcpo/agents/factory.hpp"
#include "lcpo/agents/gae.hpp"
#include "lcpo/agents/replay.hpp"
#include "lcpo/agents/sac_agent.hpp"
#include "lcpo/agents/tabular.hpp"
#include "lcpo/agents/trpo_agent.hpp"
#include "lcpo/agents/tuner.hpp"
#include "lcpo/distributions.hpp"
#include "lcpo/ood/store.hpp"
#include "lcpo/tensor/checkpoint.hpp"

using namespace lcpo;

namespace {

Eigen::RowVectorXd random_row(int n, Rng& rng) {
  Eigen::RowVectorXd r(n);
  for (int i = 0; i < n; ++i) r[i] = rng.uniform(-1.0, 1.0);
  return r;
}

Transition make_transition(const Eigen::RowVectorXd& obs, const Eigen::RowVectorXd& next_obs,
                           int feature_dim, int action, double reward, bool done) {
  Transition t;
  t.obs = obs;
  t.next_obs = next_obs;
  t.input_features = obs.head(feature_dim);
  t.action = action;
  t.reward = reward;
  t.done = done;
  return t;
}

// Reference GAE: advantage at t is the (gamma*lambda)-discounted sum of TD
// residuals up to and including the first terminal step.
GaeResult gae_reference(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                        const std::vector<bool>& dones, double gamma, double lambda,
                        double bootstrap) {
  const auto n = rewards.size();
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double acc = 0.0;
    double coef = 1.0;
    for (Eigen::Index u = t; u < n; ++u) {
      const double next_v = (u + 1 < n) ? values[u + 1] : bootstrap;
      const double live = dones[u] ? 0.0 : 1.0;
      acc += coef * (rewards[u] + gamma * live * next_v - values[u]);
      if (dones[u]) break;
      coef *= gamma * lambda;
    }
    out.advantages[t] = acc;
    out.returns[t] = acc + values[t];
  }
  return out;
}

std::string save_to_string(const Agent& agent) {
  std::ostringstream out(std::ios::binary);
  agent.save(out);
  return out.str();
}

// Reads the leading network blocks out of an agent checkpoint stream.
std::vector<std::pair<MlpSpec, ParamVector>> read_nets(const std::string& blob, int count) {
  std::istringstream in(blob, std::ios::binary);
  std::vector<std::pair<MlpSpec, ParamVector>> nets;
  for (int i = 0; i < count; ++i) {
    MlpSpec spec;
    ParamVector params;
    load_net(in, spec, params);
    nets.emplace_back(spec, params);
  }
  return nets;
}

double max_abs_diff(const ParamVector& a, const ParamVector& b) {
  REQUIRE(a.size() == b.size());
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("gae matches the discounted-sum reference") {
  Rng rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + rng.uniform_int(40);
    Eigen::VectorXd rewards(n), values(n);
    std::vector<bool> dones(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      rewards[i] = rng.uniform(-2.0, 2.0);
      values[i] = rng.uniform(-2.0, 2.0);
      dones[static_cast<size_t>(i)] = rng.uniform() < 0.2;
    }
    const double gamma = rng.uniform(0.5, 1.0);
    const double lambda = rng.uniform(0.0, 1.0);
    const double bootstrap = rng.uniform(-2.0, 2.0);

    const GaeResult got = gae_advantages(rewards, values, dones, gamma, lambda, bootstrap);
    const GaeResult ref = gae_reference(rewards, values, dones, gamma, lambda, bootstrap);
    for (int t = 0; t < n; ++t) {
      CHECK(got.advantages[t] == doctest::Approx(ref.advantages[t]).epsilon(1e-10));
      CHECK(got.returns[t] == doctest::Approx(ref.returns[t]).epsilon(1e-10));
      CHECK(got.returns[t] == doctest::Approx(got.advantages[t] + values[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("gae hand-computed episode with a terminal cut") {
  // Two one-step episodes back to back; the done at t=1 must stop both the
  // bootstrap and the advantage recursion.
  Eigen::VectorXd rewards(3), values(3);
  rewards << 1.0, -0.5, 2.0;
  values << 0.25, 0.5, -0.25;
  std::vector<bool> dones{false, true, false};
  const double gamma = 0.5, lambda = 0.5, bootstrap = 4.0;

  const GaeResult g = gae_advantages(rewards, values, dones, gamma, lambda, bootstrap);
  const double d2 = 2.0 + 0.5 * 4.0 - (-0.25);  // 4.25
  const double d1 = -0.5 - 0.5;                 // -1.0 (done: no bootstrap)
  const double d0 = 1.0 + 0.5 * 0.5 - 0.25;     // 1.0
  CHECK(g.advantages[2] == doctest::Approx(d2).epsilon(1e-14));
  CHECK(g.advantages[1] == doctest::Approx(d1).epsilon(1e-14));
  CHECK(g.advantages[0] == doctest::Approx(d0 + 0.25 * d1).epsilon(1e-14));
  CHECK_THROWS_AS(gae_advantages(rewards, Eigen::VectorXd::Zero(2), dones, gamma, lambda, 0.0),
                  std::invalid_argument);
}

TEST_CASE("normalize_advantages standardizes and zeroes degenerate batches") {
  Rng rng(7);
  Eigen::VectorXd a(257);
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng.uniform(-5.0, 3.0);
  normalize_advantages(a);
  CHECK(std::abs(a.mean()) < 1e-12);
  CHECK(a.squaredNorm() / static_cast<double>(a.size()) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::VectorXd single(1);
  single << 42.0;
  normalize_advantages(single);
  CHECK(single[0] == 0.0);

  Eigen::VectorXd flat = Eigen::VectorXd::Constant(8, -3.25);
  normalize_advantages(flat);
  CHECK(flat.cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd empty(0);
  normalize_advantages(empty);  // must not crash
  CHECK(empty.size() == 0);
}

TEST_CASE("rollout batch assembles matrices in transition order") {
  Rng rng(12);
  RolloutBatch roll;
  for (int i = 0; i < 3; ++i) {
    Transition t = make_transition(random_row(4, rng), random_row(4, rng), 2, i, 0.5 * i,
                                   i == 2);
    t.behavior_log_prob = -0.1 * (i + 1);
    roll.transitions.push_back(t);
  }
  CHECK(roll.size() == 3);
  const Matrix2D obs = roll.obs_matrix();
  const Matrix2D next_obs = roll.next_obs_matrix();
  const Matrix2D feats = roll.features_matrix();
  CHECK(obs.rows() == 3);
  CHECK(feats.cols() == 2);
  for (int i = 0; i < 3; ++i) {
    CHECK((obs.row(i) - roll.transitions[static_cast<size_t>(i)].obs).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((next_obs.row(i) - roll.transitions[static_cast<size_t>(i)].next_obs)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((feats.row(i) - roll.transitions[static_cast<size_t>(i)].obs.head(2))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK(roll.actions()[static_cast<size_t>(i)] == i);
    CHECK(roll.rewards()[i] == 0.5 * i);
    CHECK(roll.behavior_log_probs()[i] == -0.1 * (i + 1));
  }
}

TEST_CASE("replay buffer samples stored transitions uniformly with replacement") {
  ReplayBuffer buf;
  Rng rng(3);
  CHECK_THROWS_AS(buf.sample(4, rng), std::logic_error);

  std::vector<Transition> stored;
  for (int i = 0; i < 4; ++i) {
    Transition t = make_transition(Eigen::RowVectorXd::Constant(3, double(i)),
                                   Eigen::RowVectorXd::Constant(3, double(i) + 0.5), 1, i,
                                   double(i) * 2.0, i % 2 == 1);
    stored.push_back(t);
    buf.add(t);
  }
  CHECK(buf.size() == 4);
  CHECK_THROWS_AS(buf.sample(0, rng), std::invalid_argument);

  const ReplaySample s = buf.sample(400, rng);
  CHECK(s.obs.rows() == 400);
  std::set<int> seen;
  for (int i = 0; i < 400; ++i) {
    const int which = static_cast<int>(s.obs(i, 0));
    REQUIRE(which >= 0);
    REQUIRE(which < 4);
    seen.insert(which);
    const Transition& t = stored[static_cast<size_t>(which)];
    CHECK((s.obs.row(i) - t.obs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s.next_obs.row(i) - t.next_obs).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.actions[static_cast<size_t>(i)] == t.action);
    CHECK(s.rewards[i] == t.reward);
    CHECK(s.dones[static_cast<size_t>(i)] == t.done);
  }
  // 400 uniform draws over 4 entries miss one with probability ~4e-50.
  CHECK(seen.size() == 4);
}

TEST_CASE("entropy tuner integrates the entropy gap exactly") {
  const double base = 0.03, target = 0.14, lr = 1e-3;
  EntropyTuner tuner(base, target, lr);
  CHECK(tuner.log_alpha() == 0.0);
  CHECK(tuner.alpha() == base);

  double log_alpha = 0.0;
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const double measured = rng.uniform(0.0, 1.4);
    const double alpha = tuner.update(measured);
    log_alpha += lr * (target - measured);
    CHECK(tuner.log_alpha() == log_alpha);
    CHECK(alpha == std::clamp(base * std::exp(log_alpha), 1e-6, 10.0));
  }

  tuner.restore(100.0);
  CHECK(tuner.alpha() == 10.0);  // upper clamp
  tuner.restore(-100.0);
  CHECK(tuner.alpha() == 1e-6);  // lower clamp
  tuner.restore(0.5);
  CHECK(tuner.log_alpha() == 0.5);
}

TEST_CASE("actor-critic acting: greedy argmax, sampled log-probs, pure probes") {
  AgentSpec spec;
  spec.kind = "a2c";
  spec.obs_dim = 3;
  spec.n_actions = 4;
  spec.actor_hidden = {8};
  spec.critic_hidden = {8};
  Rng init(21);
  auto agent = make_agent(spec, init);

  Rng obs_rng(2);
  Rng act_rng(5);
  for (int i = 0; i < 20; ++i) {
    const Eigen::RowVectorXd obs = random_row(3, obs_rng);
    const Eigen::VectorXd probs = agent->action_probs(obs);
    CHECK(probs.size() == 4);
    CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(probs.minCoeff() > 0.0);
    // Probing twice changes nothing.
    CHECK(max_abs_diff(agent->action_probs(obs), probs) == 0.0);

    int argmax = 0;
    probs.maxCoeff(&argmax);
    const ActResult greedy = agent->act(obs, ActMode::Greedy, act_rng);
    CHECK(greedy.action == argmax);
    CHECK(greedy.log_prob == doctest::Approx(std::log(probs[argmax])).epsilon(1e-12));

    const ActResult sampled = agent->act(obs, ActMode::Explore, act_rng);
    CHECK(sampled.action >= 0);
    CHECK(sampled.action < 4);
    CHECK(sampled.log_prob ==
          doctest::Approx(std::log(probs[sampled.action])).epsilon(1e-12));
  }
  CHECK(agent->experience_store() == nullptr);
}

TEST_CASE("a2c update consumes the rollout and reports coherent stats") {
  AgentSpec spec;
  spec.kind = "a2c";
  spec.obs_dim = 3;
  spec.n_actions = 3;
  spec.actor_hidden = {8};
  spec.critic_hidden = {8};
  spec.entropy_base = 0.03;
  Rng init(31);
  auto agent = make_agent(spec, init);

  // Nothing collected yet: the update is a no-op.
  CHECK(agent->update(0).updated == false);

  Rng obs_rng(4);
  Rng act_rng(6);
  Eigen::RowVectorXd obs = random_row(3, obs_rng);
  for (int t = 0; t < 12; ++t) {
    const ActResult a = agent->act(obs, ActMode::Explore, act_rng);
    const Eigen::RowVectorXd next = random_row(3, obs_rng);
    Transition tr = make_transition(obs, next, 2, a.action, obs.sum(), t == 11);
    tr.behavior_log_prob = a.log_prob;
    tr.value_estimate = a.value;
    agent->observe(tr);
    obs = next;
  }
  const std::string before = save_to_string(*agent);
  const UpdateStats s = agent->update(0);
  CHECK(s.updated);
  CHECK(s.alpha == 0.03);  // log_alpha starts at zero
  CHECK(s.entropy > 0.0);
  CHECK(s.entropy <= std::log(3.0) + 1e-9);
  CHECK(s.v_pg_norm > 0.0);
  CHECK(s.critic_loss >= 0.0);
  CHECK(s.anchor_count == 0);
  CHECK(s.solver_step == false);
  CHECK(save_to_string(*agent) != before);  // both nets moved
  // The rollout was consumed.
  CHECK(agent->update(1).updated == false);
}

TEST_CASE("lcpo-s with no anchor candidates tracks a2c bit for bit") {
  // Identical seeds, identical episodes; the L2 gate is set so far out that
  // the anchor set is always empty, which must reduce every anchored variant
  // to the plain Adam policy-gradient step (and consume no extra rng draws).
  AgentSpec base;
  base.obs_dim = 4;
  base.n_actions = 3;
  base.feature_dim = 2;
  base.actor_hidden = {8, 8};
  base.critic_hidden = {8, 8};
  base.entropy_base = 0.03;

  AgentSpec plain = base;
  plain.kind = "a2c";
  AgentSpec anchored = base;
  anchored.kind = "lcpo_s";
  anchored.ood.kind = OodKind::L2;
  anchored.ood.l2_threshold = 1e18;

  Rng init_a(5), init_b(5);
  auto a2c = make_agent(plain, init_a);
  auto lcpo = make_agent(anchored, init_b);
  CHECK(save_to_string(*a2c) == save_to_string(*lcpo));

  Rng obs_rng(3);
  Rng act_a(9), act_b(9);
  for (int epoch = 0; epoch < 5; ++epoch) {
    Eigen::RowVectorXd obs = random_row(4, obs_rng);
    for (int t = 0; t < 20; ++t) {
      const ActResult ra = a2c->act(obs, ActMode::Explore, act_a);
      const ActResult rb = lcpo->act(obs, ActMode::Explore, act_b);
      REQUIRE(ra.action == rb.action);
      REQUIRE(ra.log_prob == rb.log_prob);
      REQUIRE(ra.value == rb.value);
      const Eigen::RowVectorXd next = random_row(4, obs_rng);
      const double reward = obs.sum() + 0.1 * ra.action;
      Transition ta = make_transition(obs, next, 2, ra.action, reward, t == 19);
      ta.behavior_log_prob = ra.log_prob;
      ta.value_estimate = ra.value;
      Transition tb = ta;
      tb.behavior_log_prob = rb.log_prob;
      tb.value_estimate = rb.value;
      a2c->observe(ta);
      lcpo->observe(tb);
      obs = next;
    }
    const UpdateStats sa = a2c->update(epoch);
    const UpdateStats sb = lcpo->update(epoch);
    CHECK(sa.updated);
    CHECK(sb.updated);
    CHECK(sb.anchor_count == 0);
    CHECK(sb.solver_step == false);
    CHECK(sb.store_size == 20 * (epoch + 1));
    CHECK(sa.entropy == sb.entropy);
    CHECK(sa.v_pg_norm == sb.v_pg_norm);
    // Actor, critic, and tuner state stay byte-identical after every epoch.
    CHECK(save_to_string(*a2c) == save_to_string(*lcpo));
  }
  CHECK(a2c->experience_store() == nullptr);
  REQUIRE(lcpo->experience_store() != nullptr);
  CHECK(lcpo->experience_store()->size() == 100);
}

TEST_CASE("actor-critic checkpoint round trip preserves behavior and tuner state") {
  AgentSpec spec;
  spec.kind = "lcpo_s";
  spec.obs_dim = 3;
  spec.n_actions = 3;
  spec.feature_dim = 2;
  spec.actor_hidden = {6};
  spec.critic_hidden = {6};
  spec.entropy_base = 0.03;
  spec.ood.l2_threshold = 1e18;

  Rng init(77);
  auto agent = make_agent(spec, init);
  Rng obs_rng(8), act_rng(13);
  for (int epoch = 0; epoch < 3; ++epoch) {
    Eigen::RowVectorXd obs = random_row(3, obs_rng);
    for (int t = 0; t < 10; ++t) {
      const ActResult a = agent->act(obs, ActMode::Explore, act_rng);
      const Eigen::RowVectorXd next = random_row(3, obs_rng);
      Transition tr = make_transition(obs, next, 2, a.action, obs.sum(), t == 9);
      tr.behavior_log_prob = a.log_prob;
      agent->observe(tr);
      obs = next;
    }
    agent->update(epoch);
  }
  const std::string blob = save_to_string(*agent);

  Rng other_init(991);
  auto restored = make_agent(spec, other_init);
  CHECK(save_to_string(*restored) != blob);
  std::istringstream in(blob, std::ios::binary);
  restored->load(in);
  CHECK(save_to_string(*restored) == blob);
  const Eigen::RowVectorXd probe = random_row(3, obs_rng);
  CHECK(max_abs_diff(agent->action_probs(probe), restored->action_probs(probe)) == 0.0);

  std::istringstream garbage(std::string(64, 'x'), std::ios::binary);
  CHECK_THROWS_AS(restored->load(garbage), std::runtime_error);
  std::istringstream truncated(blob.substr(0, blob.size() / 2), std::ios::binary);
  CHECK_THROWS_AS(restored->load(truncated), std::runtime_error);
}

TEST_CASE("trpo update stays inside its trust region") {
  AgentSpec spec;
  spec.kind = "trpo";
  spec.obs_dim = 4;
  spec.n_actions = 3;
  spec.actor_hidden = {8};
  spec.critic_hidden = {8};
  spec.trpo_stepsize = 0.01;
  Rng init(55);
  auto agent = make_agent(spec, init);

  Rng obs_rng(14), act_rng(15);
  Eigen::RowVectorXd obs = random_row(4, obs_rng);
  for (int t = 0; t < 40; ++t) {
    const ActResult a = agent->act(obs, ActMode::Explore, act_rng);
    const Eigen::RowVectorXd next = random_row(4, obs_rng);
    Transition tr = make_transition(obs, next, 2, a.action, obs[0] - 0.2 * a.action, t == 39);
    tr.behavior_log_prob = a.log_prob;
    agent->observe(tr);
    obs = next;
  }
  const UpdateStats s = agent->update(0);
  CHECK(s.updated);
  CHECK(s.solver_step);
  CHECK(s.v_pg_norm > 0.0);
  CHECK(s.kl_recent_realized <= spec.trpo_stepsize * (1.0 + 1e-9));
  CHECK(s.halvings >= 0);
  CHECK(s.alpha == 0.0);  // no entropy tuner on this baseline
  CHECK(s.entropy > 0.0);

  const std::string blob = save_to_string(*agent);
  Rng other(555);
  auto restored = make_agent(spec, other);
  std::istringstream in(blob, std::ios::binary);
  restored->load(in);
  CHECK(save_to_string(*restored) == blob);
}

TEST_CASE("ddqn epsilon schedule: forced-uniform period, then linear anneal") {
  DdqnParams p;
  p.obs_dim = 2;
  p.n_actions = 3;
  p.hidden = {4};
  p.batch_size = 8;
  p.random_period = 2;
  p.eps_anneal = 10;
  Rng init(40);
  DdqnAgent agent(p, init);

  CHECK(agent.epsilon() == 1.0);
  agent.update(0);  // buffer empty: skipped, but the epoch still counts
  CHECK(agent.epsilon() == 1.0);
  agent.update(1);
  CHECK(agent.epsilon() == 1.0 - 2.0 / 10.0);
  agent.update(5);
  CHECK(agent.epsilon() == 1.0 - 6.0 / 10.0);
  agent.update(9);
  CHECK(agent.epsilon() == 0.0);
  agent.update(50);
  CHECK(agent.epsilon() == 0.0);
}

TEST_CASE("ddqn acts uniformly while epsilon is 1 and greedily on argmax") {
  DdqnParams p;
  p.obs_dim = 2;
  p.n_actions = 4;
  p.hidden = {6};
  p.random_period = 1000;
  Rng init(41);
  DdqnAgent agent(p, init);

  Rng act_rng(42);
  const Eigen::RowVectorXd obs = (Eigen::RowVectorXd(2) << 0.3, -0.7).finished();
  std::vector<int> counts(4, 0);
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) {
    const ActResult r = agent.act(obs, ActMode::Explore, act_rng);
    REQUIRE(r.action >= 0);
    REQUIRE(r.action < 4);
    CHECK(r.log_prob == 0.0);
    ++counts[static_cast<size_t>(r.action)];
  }
  double chi2 = 0.0;
  const double expect = draws / 4.0;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 25.0);  // df=3; 25 is far beyond the p=0.001 quantile

  // Greedy ignores epsilon entirely and lands on the argmax Q action.
  const Eigen::VectorXd probs = agent.action_probs(obs);
  CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
  int argmax = 0;
  probs.maxCoeff(&argmax);
  CHECK(probs[argmax] == 1.0);  // value-based probe is one-hot
  for (int i = 0; i < 10; ++i) {
    const ActResult g = agent.act(obs, ActMode::Greedy, act_rng);
    CHECK(g.action == argmax);
  }
}

TEST_CASE("ddqn update replays the exact double-q rule, adam step, and polyak mix") {
  DdqnParams p;
  p.obs_dim = 3;
  p.n_actions = 3;
  p.hidden = {6};
  p.lr = 1e-3;
  p.weight_decay = 1e-4;
  p.gamma = 0.9;
  p.batch_size = 4;
  p.polyak = 0.25;
  p.random_period = 0;
  p.eps_anneal = 5;

  for (const bool terminal : {false, true}) {
    CAPTURE(terminal);
    Rng init(43);
    DdqnAgent agent(p, init);

    auto nets = read_nets(save_to_string(agent), 2);
    Rng scratch(1);
    Mlp q(nets[0].first, scratch);
    q.set_params(nets[0].second);
    Mlp q_target(nets[1].first, scratch);
    q_target.set_params(nets[1].second);
    CHECK(max_abs_diff(nets[0].second, nets[1].second) == 0.0);  // fresh copy

    // Identical transitions make the uniform replay draw irrelevant, so the
    // whole update is a deterministic function of the network parameters.
    const Eigen::RowVectorXd obs = (Eigen::RowVectorXd(3) << 0.2, -0.4, 0.9).finished();
    const Eigen::RowVectorXd next_obs = (Eigen::RowVectorXd(3) << -0.6, 0.1, 0.3).finished();
    const int action = 1;
    const double reward = 0.7;
    for (int i = 0; i < 4; ++i)
      agent.observe(make_transition(obs, next_obs, 1, action, reward, terminal));

    Matrix2D obs_m(4, 3), next_m(4, 3);
    for (int i = 0; i < 4; ++i) {
      obs_m.row(i) = obs;
      next_m.row(i) = next_obs;
    }
    const Matrix2D q_next = q.forward(next_m);
    const Matrix2D qt_next = q_target.forward(next_m);
    const Matrix2D q_all = q.forward(obs_m);
    Eigen::VectorXd err(4);
    Matrix2D upstream = Matrix2D::Zero(4, 3);
    const double live = terminal ? 0.0 : 1.0;
    for (int i = 0; i < 4; ++i) {
      int best = 0;
      q_next.row(i).maxCoeff(&best);
      const double target = reward + p.gamma * live * qt_next(i, best);
      err[i] = q_all(i, action) - target;
      upstream(i, action) = 2.0 * err[i] / 4.0;
    }
    const double expected_loss = err.squaredNorm() / 4.0;
    const ParamVector grad = q.backward(obs_m, upstream);
    ParamVector expected_q = q.get_params();
    Adam ref_opt({p.lr, 0.9, 0.999, 1e-8, p.weight_decay}, q.param_count());
    ref_opt.step(expected_q, grad);
    const ParamVector expected_target =
        (1.0 - p.polyak) * q_target.get_params() + p.polyak * expected_q;

    const UpdateStats s = agent.update(0);
    CHECK(s.updated);
    CHECK(s.critic_loss == expected_loss);
    CHECK(s.epsilon == 1.0 - 1.0 / 5.0);

    auto after = read_nets(save_to_string(agent), 2);
    CHECK(max_abs_diff(after[0].second, expected_q) == 0.0);
    CHECK(max_abs_diff(after[1].second, expected_target) == 0.0);
  }
}

TEST_CASE("ddqn skips the update until the replay holds a full batch") {
  DdqnParams p;
  p.obs_dim = 2;
  p.n_actions = 2;
  p.hidden = {4};
  p.batch_size = 4;
  Rng init(44);
  DdqnAgent agent(p, init);
  Rng rng(1);
  for (int i = 0; i < 3; ++i)
    agent.observe(make_transition(random_row(2, rng), random_row(2, rng), 1, 0, 0.0, false));
  const std::string before = save_to_string(agent);
  const UpdateStats s = agent.update(0);
  CHECK_FALSE(s.updated);
  // Nothing moved except the epoch counter embedded in the checkpoint tail.
  const std::string after = save_to_string(agent);
  CHECK(before.size() == after.size());
  CHECK(before.substr(0, before.size() - sizeof(int64_t)) ==
        after.substr(0, after.size() - sizeof(int64_t)));

  agent.observe(make_transition(random_row(2, rng), random_row(2, rng), 1, 1, 1.0, false));
  CHECK(agent.update(1).updated);
}

TEST_CASE("ddqn checkpoint round trip restores both networks and the epoch count") {
  DdqnParams p;
  p.obs_dim = 2;
  p.n_actions = 3;
  p.hidden = {5};
  p.batch_size = 2;
  p.random_period = 0;
  Rng init(45);
  DdqnAgent agent(p, init);
  Rng rng(2);
  for (int i = 0; i < 2; ++i)
    agent.observe(make_transition(random_row(2, rng), random_row(2, rng), 1, i, 0.5, false));
  agent.update(0);
  agent.update(1);
  const std::string blob = save_to_string(agent);

  Rng other(456);
  DdqnAgent restored(p, other);
  std::istringstream in(blob, std::ios::binary);
  restored.load(in);
  CHECK(save_to_string(restored) == blob);
  CHECK(restored.epsilon() == agent.epsilon());  // epochs_done_ restored

  std::istringstream garbage(std::string(16, 'z'), std::ios::binary);
  CHECK_THROWS_AS(restored.load(garbage), std::runtime_error);
}

TEST_CASE("sac acts uniformly during the random period, then from the actor") {
  SacParams p;
  p.obs_dim = 3;
  p.n_actions = 4;
  p.actor_hidden = {6};
  p.critic_hidden = {6};
  p.random_period = 5;
  Rng init(50);
  SacAgent agent(p, init);

  Rng act_rng(51);
  const Eigen::RowVectorXd obs = (Eigen::RowVectorXd(3) << 0.1, 0.2, -0.3).finished();
  for (int i = 0; i < 50; ++i) {
    const ActResult r = agent.act(obs, ActMode::Explore, act_rng);
    CHECK(r.log_prob == -std::log(4.0));
    CHECK(r.action >= 0);
    CHECK(r.action < 4);
  }
  // Greedy is unaffected by the random period.
  const Eigen::VectorXd probs = agent.action_probs(obs);
  int argmax = 0;
  probs.maxCoeff(&argmax);
  CHECK(agent.act(obs, ActMode::Greedy, act_rng).action == argmax);

  // Empty-buffer updates still advance the epoch clock past the period.
  agent.update(4);  // epochs_done_ = 5
  const ActResult r = agent.act(obs, ActMode::Explore, act_rng);
  CHECK(r.log_prob == doctest::Approx(std::log(probs[r.action])).epsilon(1e-12));
}

TEST_CASE("sac update replays the soft target, twin critics, actor step, and tuner") {
  SacParams p;
  p.obs_dim = 3;
  p.n_actions = 3;
  p.actor_hidden = {6};
  p.critic_hidden = {6};
  p.lr_actor = 4e-4;
  p.lr_critic = 1e-3;
  p.weight_decay = 1e-4;
  p.gamma = 0.9;
  p.batch_size = 4;
  p.polyak = 0.25;
  p.random_period = 0;
  p.entropy_base = 0.1;
  p.entropy_target = 0.2;
  p.tuner_lr = 1e-3;

  Rng init(52);
  SacAgent agent(p, init);
  auto nets = read_nets(save_to_string(agent), 5);
  Rng scratch(1);
  Mlp actor(nets[0].first, scratch);
  actor.set_params(nets[0].second);
  Mlp q1(nets[1].first, scratch);
  q1.set_params(nets[1].second);
  Mlp q2(nets[2].first, scratch);
  q2.set_params(nets[2].second);
  Mlp q1t(nets[3].first, scratch);
  q1t.set_params(nets[3].second);
  Mlp q2t(nets[4].first, scratch);
  q2t.set_params(nets[4].second);
  CHECK(max_abs_diff(nets[1].second, nets[3].second) == 0.0);
  CHECK(max_abs_diff(nets[2].second, nets[4].second) == 0.0);

  const Eigen::RowVectorXd obs = (Eigen::RowVectorXd(3) << 0.5, -0.2, 0.1).finished();
  const Eigen::RowVectorXd next_obs = (Eigen::RowVectorXd(3) << -0.1, 0.4, 0.8).finished();
  const int action = 2;
  const double reward = 0.5;
  for (int i = 0; i < 4; ++i)
    agent.observe(make_transition(obs, next_obs, 1, action, reward, false));

  Matrix2D obs_m(4, 3), next_m(4, 3);
  for (int i = 0; i < 4; ++i) {
    obs_m.row(i) = obs;
    next_m.row(i) = next_obs;
  }
  const double alpha = std::clamp(p.entropy_base, 1e-6, 10.0);  // log_alpha = 0

  const CategoricalBatch dist_next = CategoricalBatch::from_logits(actor.forward_logits(next_m));
  const Matrix2D min_qt = q1t.forward(next_m).cwiseMin(q2t.forward(next_m));
  Eigen::VectorXd target(4);
  for (int i = 0; i < 4; ++i) {
    const double soft_v =
        dist_next.probs.row(i).dot(min_qt.row(i) - alpha * dist_next.log_probs.row(i));
    target[i] = reward + p.gamma * soft_v;
  }

  auto critic_step = [&](Mlp& net, Adam& opt) {
    const Matrix2D q_all = net.forward(obs_m);
    Eigen::VectorXd err(4);
    for (int i = 0; i < 4; ++i) err[i] = q_all(i, action) - target[i];
    const double loss = err.squaredNorm() / 4.0;
    Matrix2D upstream = Matrix2D::Zero(4, 3);
    for (int i = 0; i < 4; ++i) upstream(i, action) = 2.0 * err[i] / 4.0;
    const ParamVector grad = net.backward(obs_m, upstream);
    ParamVector params = net.get_params();
    opt.step(params, grad);
    net.set_params(params);
    return loss;
  };
  Adam q1_opt({p.lr_critic, 0.9, 0.999, 1e-8, p.weight_decay}, q1.param_count());
  Adam q2_opt({p.lr_critic, 0.9, 0.999, 1e-8, p.weight_decay}, q2.param_count());
  const double l1 = critic_step(q1, q1_opt);
  const double l2 = critic_step(q2, q2_opt);

  const Matrix2D min_q = q1.forward(obs_m).cwiseMin(q2.forward(obs_m));
  const CategoricalBatch dist = CategoricalBatch::from_logits(actor.forward_logits(obs_m));
  const Matrix2D g = alpha * dist.log_probs - min_q;
  Matrix2D upstream(4, 3);
  for (int i = 0; i < 4; ++i) {
    const double g_bar = dist.probs.row(i).dot(g.row(i));
    upstream.row(i) = (dist.probs.row(i).array() * (g.row(i).array() - g_bar)).matrix() / 4.0;
  }
  const double measured_entropy = entropy_per_row(dist).mean();
  const ParamVector actor_grad = actor.backward_from_logits(obs_m, upstream);
  ParamVector expected_actor = actor.get_params();
  Adam actor_opt({p.lr_actor, 0.9, 0.999, 1e-8, p.weight_decay}, actor.param_count());
  actor_opt.step(expected_actor, actor_grad);

  const double expected_log_alpha = p.tuner_lr * (p.entropy_target - measured_entropy);
  const double expected_alpha =
      std::clamp(p.entropy_base * std::exp(expected_log_alpha), 1e-6, 10.0);
  const ParamVector expected_q1t = 0.75 * nets[3].second + 0.25 * q1.get_params();
  const ParamVector expected_q2t = 0.75 * nets[4].second + 0.25 * q2.get_params();

  const UpdateStats s = agent.update(0);
  CHECK(s.updated);
  CHECK(s.critic_loss == 0.5 * (l1 + l2));
  CHECK(s.entropy == measured_entropy);
  CHECK(s.alpha == expected_alpha);

  const std::string blob = save_to_string(agent);
  auto after = read_nets(blob, 5);
  CHECK(max_abs_diff(after[0].second, expected_actor) == 0.0);
  CHECK(max_abs_diff(after[1].second, q1.get_params()) == 0.0);
  CHECK(max_abs_diff(after[2].second, q2.get_params()) == 0.0);
  CHECK(max_abs_diff(after[3].second, expected_q1t) == 0.0);
  CHECK(max_abs_diff(after[4].second, expected_q2t) == 0.0);

  // The stored log_alpha sits right after the five network blocks.
  size_t offset = 0;
  {
    std::istringstream in(blob, std::ios::binary);
    for (int i = 0; i < 5; ++i) {
      MlpSpec spec;
      ParamVector params;
      load_net(in, spec, params);
    }
    offset = static_cast<size_t>(in.tellg());
  }
  double stored_log_alpha = 0.0;
  std::memcpy(&stored_log_alpha, blob.data() + offset, sizeof(double));
  CHECK(stored_log_alpha == expected_log_alpha);
}

TEST_CASE("sac skips the update while the replay is short, but keeps the alpha stat") {
  SacParams p;
  p.obs_dim = 2;
  p.n_actions = 2;
  p.actor_hidden = {4};
  p.critic_hidden = {4};
  p.batch_size = 8;
  p.entropy_base = 0.1;
  Rng init(53);
  SacAgent agent(p, init);
  const UpdateStats s = agent.update(0);
  CHECK_FALSE(s.updated);
  CHECK(s.alpha == 0.1);
}

TEST_CASE("sac checkpoint round trip restores all five networks and log_alpha") {
  SacParams p;
  p.obs_dim = 2;
  p.n_actions = 3;
  p.actor_hidden = {4};
  p.critic_hidden = {4};
  p.batch_size = 2;
  p.random_period = 0;
  Rng init(54);
  SacAgent agent(p, init);
  Rng rng(3);
  for (int i = 0; i < 2; ++i)
    agent.observe(make_transition(random_row(2, rng), random_row(2, rng), 1, i, 0.25, false));
  agent.update(0);
  const std::string blob = save_to_string(agent);

  Rng other(540);
  SacAgent restored(p, other);
  CHECK(save_to_string(restored) != blob);
  std::istringstream in(blob, std::ios::binary);
  restored.load(in);
  CHECK(save_to_string(restored) == blob);

  std::istringstream truncated(blob.substr(0, 40), std::ios::binary);
  CHECK_THROWS_AS(restored.load(truncated), std::runtime_error);
}

TEST_CASE("tabular a2c: row decoding, uniform start, and width validation") {
  TabularParams p;
  p.n_states = 9;
  p.n_inputs = 2;
  p.n_actions = 4;
  TabularA2cAgent agent(p);

  Eigen::RowVectorXd obs(11);
  obs.setZero();
  obs[4] = 1.0;   // state 4
  obs[9 + 1] = 1.0;  // input 1
  const Eigen::VectorXd probs = agent.action_probs(obs);
  CHECK(probs.size() == 4);
  for (int a = 0; a < 4; ++a) CHECK(probs[a] == 0.25);

  Rng rng(1);
  const ActResult r = agent.act(obs, ActMode::Explore, rng);
  CHECK(r.log_prob == std::log(0.25));
  CHECK(r.value == 0.0);

  CHECK_THROWS_AS(agent.action_probs(Eigen::RowVectorXd::Zero(10)), std::invalid_argument);
}

TEST_CASE("tabular a2c update matches the hand-rolled table step and isolates modes") {
  TabularParams p;
  p.n_states = 3;
  p.n_inputs = 2;
  p.n_actions = 4;
  p.lr_actor = 0.1;
  p.lr_critic = 0.2;
  p.gamma = 0.5;
  p.lambda = 0.5;
  TabularA2cAgent agent(p);

  auto obs_of = [](int state, int input) {
    Eigen::RowVectorXd o = Eigen::RowVectorXd::Zero(5);
    o[state] = 1.0;
    o[3 + input] = 1.0;
    return o;
  };
  // Two steps: rows 2 (= state 1, input 0) and 4 (= state 2, input 0).
  Transition t0 = make_transition(obs_of(1, 0), obs_of(2, 0), 2, 3, 1.0, false);
  Transition t1 = make_transition(obs_of(2, 0), obs_of(0, 0), 2, 0, -0.5, true);
  agent.observe(t0);
  agent.observe(t1);
  const UpdateStats s = agent.update(0);
  CHECK(s.updated);

  // GAE on a zero table: A1 = -0.5, A0 = 1 + (0.5*0.5)*(-0.5) = 0.875.
  const double a0 = 0.875, a1 = -0.5;
  CHECK(s.entropy == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(s.critic_loss == doctest::Approx((a0 * a0 + a1 * a1) / 2.0).epsilon(1e-12));

  // Visited rows took exactly one policy-gradient step from uniform.
  const Eigen::VectorXd p_row2 = agent.action_probs(obs_of(1, 0));
  Eigen::VectorXd z2(4);
  z2 << -0.25, -0.25, -0.25, 0.75;
  z2 *= 0.1 * a0;
  Eigen::VectorXd expect2 = (z2.array() - z2.maxCoeff()).exp();
  expect2 /= expect2.sum();
  CHECK(max_abs_diff(p_row2, expect2) < 1e-14);

  const Eigen::VectorXd p_row4 = agent.action_probs(obs_of(2, 0));
  Eigen::VectorXd z4(4);
  z4 << 0.75, -0.25, -0.25, -0.25;
  z4 *= 0.1 * a1;
  Eigen::VectorXd expect4 = (z4.array() - z4.maxCoeff()).exp();
  expect4 /= expect4.sum();
  CHECK(max_abs_diff(p_row4, expect4) < 1e-14);

  // Critic: V <- V + lr_c * (return - V) on the two visited rows.
  Rng rng(1);
  CHECK(agent.act(obs_of(1, 0), ActMode::Greedy, rng).value ==
        doctest::Approx(0.2 * a0).epsilon(1e-14));
  CHECK(agent.act(obs_of(2, 0), ActMode::Greedy, rng).value ==
        doctest::Approx(0.2 * a1).epsilon(1e-14));

  // Rows of the other input mode never moved: still exactly uniform. This is
  // the isolation that lets the table survive mode switches untouched.
  for (int state = 0; state < 3; ++state) {
    const Eigen::VectorXd q = agent.action_probs(obs_of(state, 1));
    for (int a = 0; a < 4; ++a) CHECK(q[a] == 0.25);
  }
  CHECK(agent.act(obs_of(0, 0), ActMode::Greedy, rng).value == 0.0);
}

TEST_CASE("tabular checkpoint round trip and shape guard") {
  TabularParams p;
  p.n_states = 3;
  p.n_inputs = 2;
  p.n_actions = 3;
  TabularA2cAgent agent(p);
  Eigen::RowVectorXd obs = Eigen::RowVectorXd::Zero(5);
  obs[1] = 1.0;
  obs[3] = 1.0;
  agent.observe(make_transition(obs, obs, 2, 1, 1.0, true));
  agent.update(0);
  const std::string blob = save_to_string(agent);

  TabularA2cAgent restored(p);
  CHECK(save_to_string(restored) != blob);
  std::istringstream in(blob, std::ios::binary);
  restored.load(in);
  CHECK(save_to_string(restored) == blob);

  TabularParams wide = p;
  wide.n_inputs = 3;
  TabularA2cAgent mismatched(wide);
  std::istringstream in2(blob, std::ios::binary);
  CHECK_THROWS_AS(mismatched.load(in2), std::runtime_error);

  std::istringstream garbage(std::string(32, 'q'), std::ios::binary);
  CHECK_THROWS_AS(restored.load(garbage), std::runtime_error);
}

TEST_CASE("factory builds every agent kind and rejects unknown ones") {
  const std::vector<std::string> kinds = {"a2c",  "lcpo_s", "lcpo_d", "lcpo_p",
                                          "trpo", "ddqn",   "sac",    "tabular_a2c"};
  // One-hot observation that is simultaneously a valid tabular encoding.
  Eigen::RowVectorXd obs = Eigen::RowVectorXd::Zero(11);
  obs[2] = 1.0;
  obs[9] = 1.0;

  for (const auto& kind : kinds) {
    CAPTURE(kind);
    AgentSpec spec;
    spec.kind = kind;
    spec.obs_dim = 11;
    spec.n_actions = 4;
    spec.feature_dim = 2;
    spec.actor_hidden = {8};
    spec.critic_hidden = {8};
    spec.batch_size = 8;
    spec.entropy_base = 0.03;
    spec.tabular_states = 9;
    spec.tabular_inputs = 2;
    Rng init(60);
    auto agent = make_agent(spec, init);
    REQUIRE(agent != nullptr);

    Rng act_rng(61);
    const ActResult r = agent->act(obs, ActMode::Explore, act_rng);
    CHECK(r.action >= 0);
    CHECK(r.action < 4);
    const Eigen::VectorXd probs = agent->action_probs(obs);
    CHECK(probs.size() == 4);
    CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(probs.minCoeff() >= 0.0);

    const bool anchored = is_anchored_kind(kind);
    CHECK(anchored == (kind == "lcpo_s" || kind == "lcpo_d" || kind == "lcpo_p"));
    CHECK((agent->experience_store() != nullptr) == anchored);
  }

  AgentSpec bogus;
  bogus.kind = "ppo";
  bogus.obs_dim = 3;
  bogus.n_actions = 2;
  Rng init(62);
  CHECK_THROWS_AS(make_agent(bogus, init), std::invalid_argument);

  // Parameter validation propagates out of the factory.
  AgentSpec bad = bogus;
  bad.kind = "a2c";
  bad.n_actions = 1;
  CHECK_THROWS_AS(make_agent(bad, init), std::invalid_argument);
  AgentSpec bad2 = bogus;
  bad2.kind = "lcpo_s";
  bad2.n_actions = 3;
  bad2.feature_dim = 0;  // anchored variants need the exogenous slice
  CHECK_THROWS_AS(make_agent(bad2, init), std::invalid_argument);
}
