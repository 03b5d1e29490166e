#include <benchmark/benchmark.h>

#include "anensolar/cluster.hpp"
#include "anensolar/random.hpp"
#include "anensolar/weights.hpp"

namespace {

using namespace anensolar;

void BM_AverageLinkage(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Array<2> pts({n, 4});
  Rng rng(8);
  for (auto& x : pts.data()) x = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(average_linkage(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AverageLinkage)->RangeMultiplier(2)->Range(64, 1024)->Complexity()->Unit(benchmark::kMillisecond);

void BM_EnumerateWeights(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_weights(7, 0.1, true));
}
BENCHMARK(BM_EnumerateWeights)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
