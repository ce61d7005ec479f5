#include <benchmark/benchmark.h>

#include "sparsefn/sim.hpp"

namespace {

sparsefn::SimConfig bench_config(int replicates) {
  sparsefn::SimConfig c;
  c.seed = 7;
  c.loading.kind = sparsefn::LoadingKind::homogeneous;
  c.loading.d = 100;
  c.noise = sparsefn::NoiseModel::make(sparsefn::NoiseFamily::gaussian, 2.0, 2.0,
                                       sparsefn::NoiseClass::G);
  c.theta.kind = sparsefn::ThetaKind::spike_grid;
  c.theta.s = 5;
  c.estimator.variants = {sparsefn::Variant::oracle, sparsefn::Variant::adaptive};
  c.estimator.zeta = 1000.0;
  c.replicates = replicates;
  return c;
}

void BM_risk_serial(benchmark::State& state) {
  const auto config = bench_config(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sparsefn::run_risk_serial(config));
}

void BM_risk_parallel(benchmark::State& state) {
  const auto config = bench_config(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sparsefn::run_risk(config));
}

}  // namespace

BENCHMARK(BM_risk_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_risk_parallel)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
