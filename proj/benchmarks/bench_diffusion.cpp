#include <benchmark/benchmark.h>

#include "wfibp/diffusion.hpp"
#include "wfibp/measures.hpp"
#include "wfibp/rng.hpp"

using namespace wfibp;

static void BM_EmStep(benchmark::State& state) {
  Rng rng(1);
  double x = 0.3;
  for (auto _ : state) {
    x = diffusion::em_step(x, 0.0, 1.0, 1e-3, rng);
    if (x == 0.0) x = 0.3;
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_EmStep);

static void BM_SimulateEndpoint(benchmark::State& state) {
  Rng rng(2);
  diffusion::DiffusionParams p{0.0, 1.0, 1e-3};
  const double duration = state.range(0) / 1000.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(diffusion::simulate_endpoint(0.4, p, duration, rng));
  }
}
BENCHMARK(BM_SimulateEndpoint)->Arg(10)->Arg(100)->Arg(1000);

static void BM_TruncatedProcess(benchmark::State& state) {
  Rng rng(3);
  const double u = 1.0 / state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(measures::sample_truncated_process(1.0, 1.0, u, rng));
  }
}
BENCHMARK(BM_TruncatedProcess)->Arg(20)->Arg(1000);

static void BM_SampleIbp(benchmark::State& state) {
  Rng rng(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(measures::sample_ibp(2.0, 1.0, state.range(0), rng));
  }
}
BENCHMARK(BM_SampleIbp)->Arg(10)->Arg(100);

BENCHMARK_MAIN();
