#include <benchmark/benchmark.h>

#include "lcpo/envs/gridworld.hpp"
#include "lcpo/envs/pendulum.hpp"
#include "lcpo/envs/straggler.hpp"
#include "lcpo/util/rng.hpp"

namespace {

void BM_GridWorldEpisode(benchmark::State& state) {
  lcpo::GridWorld env;
  lcpo::Rng rng(3);
  for (auto _ : state) {
    env.reset(lcpo::GridMode::TrapActive);
    while (!env.done()) benchmark::DoNotOptimize(env.step(rng.uniform_int(4)));
  }
}
BENCHMARK(BM_GridWorldEpisode);

void BM_PendulumStep(benchmark::State& state) {
  lcpo::WindyPendulum env;
  lcpo::Rng rng(3);
  env.reset(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(env.step(rng.uniform_int(15), 0.5, -0.5));
    benchmark::DoNotOptimize(env.observe());
  }
}
BENCHMARK(BM_PendulumStep);

void BM_StragglerWindow(benchmark::State& state) {
  lcpo::StragglerSim sim(0.8);
  sim.reset(11);
  lcpo::Rng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim.step(rng.uniform_int(9), 60.0, 80.0));
    benchmark::DoNotOptimize(sim.observe());
  }
}
BENCHMARK(BM_StragglerWindow);

}  // namespace

BENCHMARK_MAIN();
