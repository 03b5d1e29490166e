#include <benchmark/benchmark.h>

#include "anensolar/pv.hpp"
#include "anensolar/random.hpp"
#include "anensolar/solar.hpp"

namespace {

using namespace anensolar;

void BM_SolarPosition(benchmark::State& state) {
  EpochSeconds t = 1546300800;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solar_position(t, 40.0, -105.0));
    t += 3600;
  }
}
BENCHMARK(BM_SolarPosition);

void BM_SimulateSystem(benchmark::State& state) {
  const auto& spec = find_module(bundled_module_catalog(), "SP128");
  const SystemConfig sys;
  const auto pos = solar_position(1561118400, 40.0, -105.0);
  const SolarCell cell{pos, extraterrestrial_normal(1561118400), relative_airmass(pos.apparent_zenith)};
  Rng rng(3);
  std::vector<WeatherSample> samples(1024);
  for (auto& w : samples) w = {rng.uniform() * 900.0, 0.2, 20.0 + rng.uniform() * 10.0, rng.uniform() * 8.0};
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_system(samples[k], cell, spec, sys));
    k = (k + 1) % samples.size();
  }
}
BENCHMARK(BM_SimulateSystem);

// 21-member ensemble, 20 locations, 30 inits, 24 leads, all 11 modules.
void BM_SimulateEnsemble(benchmark::State& state) {
  const WeatherVariables vars;
  std::vector<Location> locs;
  for (std::size_t l = 0; l < 20; ++l) locs.push_back({l, 30.0 + l * 0.5, -100.0, 0.0});
  std::vector<EpochSeconds> inits;
  for (std::size_t i = 0; i < 30; ++i) inits.push_back(1546300800 + static_cast<EpochSeconds>(i) * 86400);
  std::vector<std::int64_t> leads;
  for (std::int64_t j = 0; j < 24; ++j) leads.push_back(j * 3600);
  auto weather = EnsembleTensor::make(vars.names(), LocationSet(locs), TimeAxis(inits), LeadTimeAxis(leads), 21);
  Rng rng(4);
  for (std::size_t v = 0; v < weather.variable_names.size(); ++v)
    for (std::size_t l = 0; l < 20; ++l)
      for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 24; ++j)
          for (std::size_t m = 0; m < 21; ++m) {
            const auto& name = weather.variable_names[v];
            weather.values(v, l, i, j, m) = name == vars.ghi ? rng.uniform() * 800.0
                                            : name == vars.albedo ? 20.0
                                            : name == vars.temperature ? 290.0 + rng.uniform() * 10.0
                                                                       : rng.uniform() * 5.0;
          }
  const auto cache = precompute_solar(weather.locations, weather.init_times, weather.lead_times);
  const auto& specs = bundled_module_catalog();
  const auto threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_ensemble(weather, cache, specs, SystemConfig{}, vars, threads));
  }
  state.SetItemsProcessed(state.iterations() * 20 * 30 * 24 * 21 * 11);
}
BENCHMARK(BM_SimulateEnsemble)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
