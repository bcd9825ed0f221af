// Serial reference vs OpenMP path for the replica loops and reductions.
// Run with OMP_NUM_THREADS set to the core count of interest.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "roughdrive/experiments.hpp"
#include "roughdrive/fields.hpp"
#include "roughdrive/rng.hpp"
#include "roughdrive/spde_sim.hpp"

namespace rd = roughdrive;

namespace {

rd::Exec exec_of(const benchmark::State& s) { return s.range(0) ? rd::Exec::parallel : rd::Exec::serial; }

rd::spde::GridConfig bench_grid() {
  return rd::spde::GridConfig::make(8.0, 1024, 1.0 / 1024, 0.25, {0.125, 0.25});
}

void BM_simulate_linear(benchmark::State& state) {
  const rd::ModelParams p = rd::derive_params(0.25);
  const auto grid = bench_grid();
  for (auto _ : state) {
    auto v = rd::spde::simulate_linear(grid, p, 1, 64, {exec_of(state), 1.0});
    benchmark::DoNotOptimize(v.values.data());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}

void BM_simulate_coupled(benchmark::State& state) {
  const rd::ModelParams p = rd::derive_params(0.25, 1.0);
  const auto drift = rd::make_drift_pair([](double y) { return std::sin(y); }, p, 1.0);
  const auto grid = bench_grid();
  for (auto _ : state) {
    auto tr = rd::spde::simulate_coupled(grid, p, drift, 1, 16, {exec_of(state), 1.0});
    benchmark::DoNotOptimize(tr.u0.values.data());
  }
  state.SetItemsProcessed(state.iterations() * 16);
}

void BM_cholesky_sample(benchmark::State& state) {
  const rd::TimeGrid grid = rd::TimeGrid::uniform(0.01, 1.0, 64);
  const rd::ModelParams p = rd::derive_params(0.2);
  const auto cov = rd::build_cov([&](double s, double t) { return rd::fields::cov_v_trace(s, t, p); }, grid);
  for (auto _ : state) {
    auto x = rd::cholesky_sample(cov, grid, 1, 10000, "v0", "sample", exec_of(state));
    benchmark::DoNotOptimize(x.values.data());
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}

void BM_second_moment(benchmark::State& state) {
  std::vector<double> x(1 << 20);
  rd::rng::Stream s(1, "sample", 0);
  s.fill_normal(x);
  for (auto _ : state) {
    auto m = state.range(0) ? rd::experiments::second_moment(x, rd::Exec::parallel)
                            : rd::experiments::second_moment_serial(x);
    benchmark::DoNotOptimize(m);
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(x.size() * sizeof(double)));
}

}  // namespace

BENCHMARK(BM_simulate_linear)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_coupled)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cholesky_sample)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_second_moment)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
