#include "anensolar/pipeline.hpp"

#include <memory>
#include <span>

#include "anensolar/error.hpp"
#include "anensolar/verify.hpp"

namespace anensolar {

namespace {

TimeAxis slice(const TimeAxis& t, IndexRange r) {
  if (r.empty() || r.end > t.size()) throw Error(Errc::empty_range, "init range outside the archive");
  std::vector<EpochSeconds> out;
  for (std::size_t i = r.begin; i < r.end; ++i) out.push_back(t[i]);
  return TimeAxis(out);
}

void check(const PowerChain& c) {
  if (!c.predictors || !c.weather || !c.truth) {
    throw Error(Errc::invalid_argument, "power chain needs predictors, weather and truth");
  }
  if (c.modules.empty()) throw Error(Errc::invalid_argument, "power chain needs a PV module");
}

}  // namespace

EnsembleTensor single_member(const ForecastTensor& f, IndexRange range) {
  auto out = EnsembleTensor::make(f.predictor_names, f.locations, slice(f.init_times, range),
                                  f.lead_times, 1);
  for (std::size_t v = 0; v < f.predictor_names.size(); ++v)
    for (std::size_t l = 0; l < f.locations.size(); ++l)
      for (std::size_t i = range.begin; i < range.end; ++i)
        for (std::size_t j = 0; j < f.lead_times.size(); ++j)
          out.values(v, l, i - range.begin, j, 0) = f.values(v, l, i, j);
  return out;
}

EnsembleTensor single_member(const AlignedObservations& a, const ForecastTensor& axes,
                             IndexRange range) {
  auto out = EnsembleTensor::make(a.variable_names, axes.locations,
                                  slice(axes.init_times, range), axes.lead_times, 1);
  for (std::size_t v = 0; v < a.variable_names.size(); ++v)
    for (std::size_t l = 0; l < axes.locations.size(); ++l)
      for (std::size_t i = range.begin; i < range.end; ++i)
        for (std::size_t j = 0; j < axes.lead_times.size(); ++j)
          out.values(v, l, i - range.begin, j, 0) = a.values(v, l, i, j);
  return out;
}

SolarCacheTable chain_cache(const PowerChain& chain, IndexRange range) {
  check(chain);
  const auto& f = *chain.weather;
  return precompute_solar(f.locations, slice(f.init_times, range), f.lead_times,
                          EarthSunCorrection::spencer, chain.parallel);
}

EnsembleTensor analog_weather(const PowerChain& chain, const SigmaTensor& sigma,
                              const AnEnConfig& cfg, IndexRange test, IndexRange search,
                              const SearchOptions& options) {
  check(chain);
  SearchOptions opts = options;
  opts.parallel = std::max(opts.parallel, chain.parallel);
  const auto& f = *chain.predictors;
  const auto idx = search_analogs(f, sigma, cfg, test, search, opts);
  return build_multivariate_ensemble(idx, *chain.truth, chain.variables.names(), f.locations,
                                     f.init_times, f.lead_times);
}

EnsembleTensor analog_power(const PowerChain& chain, const SigmaTensor& sigma,
                            const AnEnConfig& cfg, IndexRange test, IndexRange search,
                            const SolarCacheTable& cache, const SearchOptions& options) {
  const auto weather = analog_weather(chain, sigma, cfg, test, search, options);
  return simulate_ensemble(weather, cache, chain.modules, chain.system, chain.variables,
                           chain.parallel);
}

EnsembleTensor raw_power(const PowerChain& chain, IndexRange test, const SolarCacheTable& cache) {
  check(chain);
  const auto weather = single_member(select_predictors(*chain.weather, chain.variables.names()), test);
  return simulate_ensemble(weather, cache, chain.modules, chain.system, chain.variables,
                           chain.parallel);
}

EnsembleTensor truth_power(const PowerChain& chain, IndexRange test, const SolarCacheTable& cache) {
  check(chain);
  const auto weather = single_member(*chain.truth, *chain.weather, test);
  return simulate_ensemble(weather, cache, chain.modules, chain.system, chain.variables,
                           chain.parallel);
}

ScoreFn crps_score(const PowerChain& chain_in, const SigmaTensor& sigma, const AnEnConfig& base,
                   IndexRange validation, IndexRange search) {
  check(chain_in);
  PowerChain chain = chain_in;
  chain.modules.resize(1);
  // grid vectors are scored concurrently by the optimizer; keep each one serial
  chain.parallel = 1;
  auto cache = std::make_shared<SolarCacheTable>(chain_cache(chain, validation));
  auto truth = std::make_shared<EnsembleTensor>(truth_power(chain, validation, *cache));
  return [chain, &sigma, base, validation, search, cache, truth](
             const WeightVector& w, std::span<const std::size_t> locations) {
    AnEnConfig cfg = base;
    cfg.weights = w;
    SearchOptions opts;
    opts.only_locations.assign(locations.begin(), locations.end());
    const auto power = analog_power(chain, sigma, cfg, validation, search, *cache, opts);
    std::vector<double> scores;
    scores.reserve(locations.size());
    std::vector<double> members;
    for (auto l : locations) {
      double total = 0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < power.init_times.size(); ++i)
        for (std::size_t j = 0; j < power.lead_times.size(); ++j) {
          if (!(cache->at(l, i, j).position.apparent_zenith < 90.0)) continue;
          const double y = truth->values(0, l, i, j, 0);
          if (is_missing(y)) continue;
          members.clear();
          for (std::size_t m = 0; m < power.members(); ++m)
            if (!is_missing(power.values(0, l, i, j, m))) members.push_back(power.values(0, l, i, j, m));
          if (members.empty()) continue;
          total += crps(members, y);
          ++n;
        }
      scores.push_back(n ? total / static_cast<double>(n) : kMissing);
    }
    return scores;
  };
}

}  // namespace anensolar
