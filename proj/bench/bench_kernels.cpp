// Serial vs OpenMP pair sums and full integrator steps.
#include <benchmark/benchmark.h>

#include "ealign/particle_dynamics.hpp"
#include "ealign/rng.hpp"

using namespace ealign;

namespace {

SimConfig config(std::size_t n, Exec exec) {
  SimConfig cfg;
  cfg.model.domain = Domain::euclidean(2);
  cfg.model.kernel = InteractionKernel::gaussian();
  cfg.model.comm = CommWeight::cucker_smale(1.0, 1.0);
  cfg.n = n;
  cfg.gamma = 5.0;
  cfg.epsilon = 0.1;
  cfg.dt = 1e-3;
  cfg.exec = exec;
  return cfg;
}

ParticleState random_state(std::size_t n) {
  Rng rng(1);
  ParticleState s;
  s.dim = 2;
  s.positions.resize(2 * n);
  s.velocities.resize(2 * n);
  for (auto& x : s.positions) x = rng.normal();
  for (auto& v : s.velocities) v = 0.1 * rng.normal();
  return s;
}

void pair_sums_bench(benchmark::State& st, Exec exec) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto cfg = config(n, exec);
  const auto s = random_state(n);
  for (auto _ : st) benchmark::DoNotOptimize(pair_sums(cfg.model, s.positions, s.velocities, exec));
  st.SetComplexityN(st.range(0));
}

void step_bench(benchmark::State& st, Exec exec) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto cfg = config(n, exec);
  const auto s = random_state(n);
  for (auto _ : st) benchmark::DoNotOptimize(step(s, cfg));
}

}  // namespace

BENCHMARK_CAPTURE(pair_sums_bench, serial, Exec::serial)->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK_CAPTURE(pair_sums_bench, parallel, Exec::parallel)->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK_CAPTURE(step_bench, serial, Exec::serial)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK_CAPTURE(step_bench, parallel, Exec::parallel)->RangeMultiplier(4)->Range(64, 1024);

BENCHMARK_MAIN();
