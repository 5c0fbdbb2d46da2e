#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "qrefine/rank_kernels.hpp"

namespace {

std::pair<std::vector<double>, std::vector<double>> sample(std::size_t n) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> value(0, 20);
  std::vector<double> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = value(rng);
    y[i] = x[i] + value(rng) / 4.0;
  }
  return {x, y};
}

void BM_PermutationSerial(benchmark::State& state) {
  const auto [x, y] = sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(qrefine::permutation_test_serial(x, y, 2000, 7));
}

void BM_PermutationParallel(benchmark::State& state) {
  const auto [x, y] = sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(qrefine::permutation_test_parallel(x, y, 2000, 7));
}

void BM_Spearman(benchmark::State& state) {
  const auto [x, y] = sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(qrefine::spearman(x, y));
}

}  // namespace

BENCHMARK(BM_PermutationSerial)->Arg(100)->Arg(470)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PermutationParallel)->Arg(100)->Arg(470)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Spearman)->Arg(100)->Arg(470)->Arg(5000);

BENCHMARK_MAIN();
