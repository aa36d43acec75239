// Serial reference vs OpenMP kernels: the per-node split scan and forest fitting.

#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "cubetree/fourier.hpp"
#include "cubetree/greedy.hpp"
#include "cubetree/sampling.hpp"
#include "cubetree/split_kernel.hpp"

using namespace cubetree;

namespace {

Dataset make_data(int d, std::size_t n) {
  return sample_dataset(parse_function("x1 + x2 + x1*x2*x3", d), d, n, NoiseModel::gaussian(0.1), 42);
}

template <void (*Scan)(const Dataset&, std::span<const std::uint32_t>, std::span<const int>,
                       std::span<FeatureSplitStats>)>
void BM_Scan(benchmark::State& state) {
  const int d = 50;
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset data = make_data(d, n);
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0U);
  std::vector<int> features(d);
  std::iota(features.begin(), features.end(), 1);
  std::vector<FeatureSplitStats> out(d);
  for (auto _ : state) {
    Scan(data, idx, features, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * d);
}

void BM_ForestSerial(benchmark::State& state) {
  const Dataset data = make_data(30, static_cast<std::size_t>(state.range(0)));
  ForestParams p;
  p.trees = 32;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(data, p, Execution::Serial));
}

void BM_ForestParallel(benchmark::State& state) {
  const Dataset data = make_data(30, static_cast<std::size_t>(state.range(0)));
  ForestParams p;
  p.trees = 32;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(data, p, Execution::Parallel));
}

}  // namespace

BENCHMARK(BM_Scan<scan_features_serial>)->Name("scan/serial")->RangeMultiplier(8)->Range(1 << 9, 1 << 18);
BENCHMARK(BM_Scan<scan_features_parallel>)->Name("scan/parallel")->RangeMultiplier(8)->Range(1 << 9, 1 << 18);
BENCHMARK(BM_ForestSerial)->Name("forest/serial")->Arg(1 << 10)->Arg(1 << 13)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestParallel)->Name("forest/parallel")->Arg(1 << 10)->Arg(1 << 13)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
