#include <benchmark/benchmark.h>

#include "lcpo/solver/steps.hpp"
#include "lcpo/util/rng.hpp"

namespace {

lcpo::Mlp make_actor(int obs_dim, int n_actions, lcpo::Rng& rng) {
  lcpo::MlpSpec spec;
  spec.input_dim = obs_dim;
  spec.hidden = {64, 64};
  spec.output_dim = n_actions;
  spec.output_activation = lcpo::OutputActivation::Softmax;
  return lcpo::Mlp(spec, rng);
}

lcpo::Matrix2D random_batch(int rows, int cols, lcpo::Rng& rng) {
  lcpo::Matrix2D m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

void BM_KlHvp(benchmark::State& state) {
  lcpo::Rng rng(7);
  lcpo::Mlp actor = make_actor(9, 15, rng);
  const lcpo::Matrix2D obs = random_batch(static_cast<int>(state.range(0)), 9, rng);
  lcpo::ParamVector v(actor.param_count());
  for (int i = 0; i < v.size(); ++i) v[i] = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(lcpo::kl_hvp(actor, obs, v));
  }
}
BENCHMARK(BM_KlHvp)->Arg(32)->Arg(200)->Arg(512);

void BM_ConjugateGradient(benchmark::State& state) {
  lcpo::Rng rng(7);
  lcpo::Mlp actor = make_actor(9, 15, rng);
  const lcpo::Matrix2D obs = random_batch(200, 9, rng);
  lcpo::ParamVector v(actor.param_count());
  for (int i = 0; i < v.size(); ++i) v[i] = rng.normal();
  const lcpo::ApplyFn apply = [&](const lcpo::ParamVector& x) { return lcpo::kl_hvp(actor, obs, x); };
  for (auto _ : state) {
    benchmark::DoNotOptimize(lcpo::conjugate_gradient(apply, v, static_cast<int>(state.range(0)), 0.1));
  }
}
BENCHMARK(BM_ConjugateGradient)->Arg(10);

void BM_LcpoSStep(benchmark::State& state) {
  lcpo::Rng rng(7);
  lcpo::Mlp actor = make_actor(9, 15, rng);
  lcpo::SolverBatch recent;
  recent.obs = random_batch(200, 9, rng);
  recent.advantages = lcpo::ParamVector(200);
  recent.behavior_log_probs = lcpo::ParamVector(200);
  for (int i = 0; i < 200; ++i) {
    recent.actions.push_back(rng.uniform_int(15));
    recent.advantages[i] = rng.normal();
    recent.behavior_log_probs[i] = -std::log(15.0);
  }
  const lcpo::Matrix2D anchors = random_batch(512, 9, rng);
  lcpo::ConstraintSpec spec;
  lcpo::ParamVector v_pg(actor.param_count());
  for (int i = 0; i < v_pg.size(); ++i) v_pg[i] = 1e-3 * rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(lcpo::lcpo_s_step(actor, v_pg, recent, anchors, spec, 0.0, 4e-4));
  }
}
BENCHMARK(BM_LcpoSStep);

}  // namespace
