#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "anensolar/tensors.hpp"

namespace anensolar {

/// Forecast error for one predictor: value += bias * cloud * unit + noise * unit * N(0,1),
/// where cloud is the true cloud fraction at the valid time and unit is the
/// clear-sky envelope for dswrf and 1 (native units) otherwise.
struct ErrorModel {
  double bias = 0.0;
  double noise = 0.0;
};

struct SynthRegime {
  double cloud_offset = 0.0;                    // shift of the cloud latent mean
  std::map<std::string, ErrorModel> errors;     // overrides SynthConfig::errors
};

struct SynthConfig {
  std::uint64_t seed = 42;
  std::vector<Location> locations;
  EpochSeconds start = 1514764800;  // 2018-01-01 00:00 UTC; must be UTC midnight
  std::size_t days = 30;
  int init_hour = 0;
  std::vector<int> lead_hours;      // hourly offsets; default 0..23
  double transmittance = 0.75;
  double ar_phi = 0.9;              // hourly AR(1) coefficient of the cloud latent
  double cloud_noise = 0.35;        // innovation scale of the cloud latent
  std::map<std::string, ErrorModel> errors;
  std::vector<SynthRegime> regimes;              // empty: one neutral regime
  std::vector<std::size_t> regime_of_location;   // empty: all regime 0
  std::size_t parallel = 1;

  /// Throws Errc::invalid_argument listing every problem.
  void validate() const;
};

/// Predictors emitted (and observed) by the generator.
const std::vector<std::string>& synth_variables();

/// rows x cols grid spanning the box; `elevation(lat, lon)` fills heights.
std::vector<Location> grid_locations(std::size_t rows, std::size_t cols, double lat0,
                                     double lat1, double lon0, double lon1,
                                     double (*elevation)(double, double) = nullptr);

struct SynthOutput {
  ObservationTensor analysis;
  ForecastTensor forecasts;
};

/// Deterministic given the seed; per-location streams use derived sub-seeds.
SynthOutput generate(const SynthConfig& cfg);

}  // namespace anensolar
