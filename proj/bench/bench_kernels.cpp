#include <vector>

#include <benchmark/benchmark.h>

#include "balance/continuum_bounds.hpp"
#include "balance/dp_oracle.hpp"
#include "balance/hjb_fbsde.hpp"
#include "balance/montecarlo.hpp"

namespace {

using namespace balance;

StrategyConfig strategy_for(int kind, int n) {
  const char* names[] = {"random", "greedy", "drift"};
  return parse_strategy(names[kind], DriftSpec::stationary_tan(), n, n);
}

void BM_SimulateSerial(benchmark::State& state) {
  const auto cfg = strategy_for(int(state.range(0)), int(state.range(1)));
  for (auto _ : state) {
    auto stats = run_experiment_serial(cfg, IncrementDistribution::gaussian(), 200, 1);
    benchmark::DoNotOptimize(stats.mean);
  }
  state.SetItemsProcessed(state.iterations() * 200);
}

void BM_SimulateParallel(benchmark::State& state) {
  const auto cfg = strategy_for(int(state.range(0)), int(state.range(1)));
  for (auto _ : state) {
    auto stats = run_experiment(cfg, IncrementDistribution::gaussian(), 200, 1);
    benchmark::DoNotOptimize(stats.mean);
  }
  state.SetItemsProcessed(state.iterations() * 200);
}

void BM_DrawsGaussian(benchmark::State& state) {
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  std::uint64_t first = 0;
  for (auto _ : state) {
    fill_draws(IncrementDistribution::gaussian(), CounterKey{1, 2}, first, out);
    first += out.size();
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DpValueN2(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(dp_value_n2(int(state.range(0))));
}

void BM_LambdaEigen(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(lambda_eigen(1.0, 2.0, int(state.range(0))));
}

void BM_HjbFixedPoint(benchmark::State& state) {
  HjbGrid grid;
  grid.K = int(state.range(0));
  grid.J = 4 * grid.K;
  for (auto _ : state) benchmark::DoNotOptimize(fixed_point_solve(2.0, 0.1, grid).value);
}

}  // namespace

BENCHMARK(BM_SimulateSerial)->Args({0, 256})->Args({1, 256})->Args({2, 256})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateParallel)->Args({0, 256})->Args({1, 256})->Args({2, 256})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DrawsGaussian)->Arg(4096)->Arg(1 << 16);
BENCHMARK(BM_DpValueN2)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LambdaEigen)->Arg(256)->Arg(1024);
BENCHMARK(BM_HjbFixedPoint)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
