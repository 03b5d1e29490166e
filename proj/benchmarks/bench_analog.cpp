#include <benchmark/benchmark.h>

#include "anensolar/analog.hpp"
#include "anensolar/random.hpp"

namespace {

using namespace anensolar;

ForecastTensor archive(std::size_t predictors, std::size_t locations, std::size_t inits, std::size_t leads) {
  std::vector<std::string> names;
  for (std::size_t p = 0; p < predictors; ++p) names.push_back("p" + std::to_string(p));
  std::vector<Location> locs;
  for (std::size_t l = 0; l < locations; ++l) locs.push_back({l, 35.0, -100.0 + l * 0.1, 0.0});
  std::vector<EpochSeconds> t;
  for (std::size_t i = 0; i < inits; ++i) t.push_back(static_cast<EpochSeconds>(i) * 86400);
  std::vector<std::int64_t> j;
  for (std::size_t k = 0; k < leads; ++k) j.push_back(static_cast<std::int64_t>(k) * 3600);
  auto f = ForecastTensor::make(names, LocationSet(locs), TimeAxis(t), LeadTimeAxis(j));
  Rng rng(1);
  for (auto& v : f.values.data()) v = rng.normal();
  return f;
}

void BM_Similarity(benchmark::State& state) {
  const auto f = archive(3, 1, 400, 24);
  const auto sigma = compute_sigma(f, {0, 300});
  AnEnConfig cfg;
  cfg.weights = WeightVector::uniform(3);
  std::size_t c = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(similarity(f, sigma, cfg, 0, 350, c, 12));
    c = (c + 1) % 300;
  }
}
BENCHMARK(BM_Similarity);

// One full search: every location, test init and lead against a repository
// of state.range(0) inits.
void BM_SearchAnalogs(benchmark::State& state) {
  const auto search = static_cast<std::size_t>(state.range(0));
  const auto f = archive(3, 10, search + 30, 24);
  const auto sigma = compute_sigma(f, {0, search});
  AnEnConfig cfg;
  cfg.weights = WeightVector::uniform(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(search_analogs(f, sigma, cfg, {search, search + 30}, {0, search}));
  }
  state.SetItemsProcessed(state.iterations() * 10 * 30 * 24 * static_cast<std::int64_t>(search));
}
BENCHMARK(BM_SearchAnalogs)->Arg(90)->Arg(365)->Arg(730)->Unit(benchmark::kMillisecond);

void BM_SearchAnalogsOperational(benchmark::State& state) {
  const auto f = archive(3, 10, 395, 24);
  const auto sigma = compute_sigma(f, {0, 365});
  AnEnConfig cfg;
  cfg.weights = WeightVector::uniform(3);
  cfg.operational = true;
  for (auto _ : state) {
    benchmark::DoNotOptimize(search_analogs(f, sigma, cfg, {365, 395}, {0, 365}));
  }
}
BENCHMARK(BM_SearchAnalogsOperational)->Unit(benchmark::kMillisecond);

}  // namespace
