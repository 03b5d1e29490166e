#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "anensolar/analog.hpp"
#include "anensolar/pv.hpp"
#include "anensolar/solar.hpp"
#include "anensolar/tensors.hpp"
#include "anensolar/weights.hpp"

namespace anensolar {

/// Forecast archive, verifying analysis and the PV setup shared by the
/// AnEn -> power -> score chain.
struct PowerChain {
  const ForecastTensor* predictors = nullptr;  // similarity predictors
  const ForecastTensor* weather = nullptr;     // raw forecasts holding the PV weather variables
  const AlignedObservations* truth = nullptr;  // analysis on the forecast (init, lead) grid
  std::vector<PvModuleSpec> modules;
  SystemConfig system;
  WeatherVariables variables;
  std::size_t parallel = 1;
};

/// Copies inits `range` of a 4-D field into a one-member ensemble.
EnsembleTensor single_member(const ForecastTensor& f, IndexRange range);
EnsembleTensor single_member(const AlignedObservations& a, const ForecastTensor& axes,
                             IndexRange range);

/// Solar geometry for the inits in `range`.
SolarCacheTable chain_cache(const PowerChain& chain, IndexRange range);

/// AnEn weather ensemble for the test inits; members gather every weather
/// variable through the shared analog indices.
EnsembleTensor analog_weather(const PowerChain& chain, const SigmaTensor& sigma,
                              const AnEnConfig& cfg, IndexRange test, IndexRange search,
                              const SearchOptions& options = {});

/// Power from the AnEn ensemble, from the raw forecast and from the analysis.
EnsembleTensor analog_power(const PowerChain& chain, const SigmaTensor& sigma,
                            const AnEnConfig& cfg, IndexRange test, IndexRange search,
                            const SolarCacheTable& cache, const SearchOptions& options = {});
EnsembleTensor raw_power(const PowerChain& chain, IndexRange test, const SolarCacheTable& cache);
EnsembleTensor truth_power(const PowerChain& chain, IndexRange test, const SolarCacheTable& cache);

/// Weight-search objective: mean daylight CRPS of the first module's power
/// at each requested location over the `validation` inits. `sigma` must
/// outlive the returned function.
ScoreFn crps_score(const PowerChain& chain, const SigmaTensor& sigma, const AnEnConfig& base,
                   IndexRange validation, IndexRange search);

}  // namespace anensolar
