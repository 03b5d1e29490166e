#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "anensolar/analog.hpp"
#include "anensolar/pv.hpp"
#include "anensolar/synth.hpp"
#include "anensolar/verify.hpp"
#include "anensolar/weights.hpp"

namespace anensolar::cli {

namespace fs = std::filesystem;
using Json = nlohmann::json;

/// Built-in defaults; every accepted key appears here.
const Json& default_config();

/// Defaults <- config file <- ANENSOLAR_* environment <- --set overrides.
/// `A__B` in an environment name maps to key `a.b`.
Json load_config(const std::optional<fs::path>& file, const std::vector<std::string>& sets,
                 char** envp);

/// Applies "a.b.c=value"; the value is parsed as JSON when possible and
/// kept as a string otherwise.
void apply_override(Json& cfg, const std::string& assignment);

struct SynthSettings {
  SynthConfig config;
  std::size_t rows = 0, cols = 0;
  double lat0 = 0, lat1 = 0, lon0 = 0, lon1 = 0;
  std::string terrain;
  std::vector<double> regime_min_elevation;
};

struct RunConfig {
  fs::path output;
  std::size_t parallel = 1;
  int verbosity = 0;
  std::uint64_t seed = 42;

  fs::path forecasts;
  fs::path analysis;

  SynthSettings synth;

  AnEnConfig anen;
  std::vector<std::string> predictors;
  IndexRange search;
  IndexRange test;
  std::string samples;               // all | nn | rb
  fs::path weights_file;             // per-location weights, optional
  fs::path locations_file;           // location-id subset, optional
  bool write_distances = true;

  std::vector<std::string> modules;
  SystemConfig system;

  Grouping grouping = Grouping::lead;
  bool align_noon = true;
  std::size_t noon_slot = 12;
  fs::path region_map;
  double significance_level = 0.05;

  std::size_t regimes = 3;

  Strategy strategy = Strategy::rb;
  double step = 0.25;
  bool exclude_unit_vectors = false;
  std::size_t total_samples = 10;
  std::size_t validation_days = 0;   // last days of the search range used for scoring
  double nn_lat_spacing = 4.5;
  double nn_lon_spacing = 3.5;

  std::size_t worker_budget = 1;
  int max_retries = 3;

  fs::path path_in_output(const std::string& name) const { return output / name; }
};

/// Throws Error{invalid_argument} whose message lists every problem, one per
/// line, each prefixed by the offending key.
RunConfig resolve(const Json& cfg, const std::optional<fs::path>& out_override,
                  std::optional<std::size_t> parallel_override);

}  // namespace anensolar::cli
