#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "anensolar/tensors.hpp"

namespace anensolar {

/// Non-negative predictor weights summing to one (within 1e-9).
class WeightVector {
 public:
  WeightVector() = default;
  /// Throws Error{invalid_argument} if any weight is negative/non-finite or
  /// the sum is off by more than 1e-9.
  explicit WeightVector(std::vector<double> weights);

  static WeightVector uniform(std::size_t n);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_.at(i); }
  const std::vector<double>& values() const noexcept { return w_; }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> w_;
};

inline constexpr double kWeightSumTolerance = 1e-9;

struct AnEnConfig {
  std::size_t members = 21;
  std::size_t half_window = 1;  // in lead-axis steps
  WeightVector weights;
  bool operational = false;
  bool allow_partial = false;
  double sigma_epsilon = 1e-12;

  void validate(std::size_t predictor_count) const;
};

/// Population standard deviation per (predictor, location, lead) over the
/// search inits; missing where fewer than two finite samples exist.
struct SigmaTensor {
  Array<3> values;
};

SigmaTensor compute_sigma(const ForecastTensor& forecasts, IndexRange search);

/// Distance marker for a disqualified candidate.
inline constexpr double kDisqualified = std::numeric_limits<double>::infinity();

/// Windowed, weighted, sigma-normalized distance between the forecast at
/// (location, target_init, lead) and the one at (location, candidate_init,
/// lead). Predictors with zero weight or sigma below the epsilon contribute
/// nothing. A missing candidate value disqualifies the candidate; a missing
/// target value only drops that window term.
double similarity(const ForecastTensor& forecasts, const SigmaTensor& sigma,
                  std::span<const double> weights, std::size_t half_window,
                  double sigma_epsilon, std::size_t location,
                  std::size_t target_init, std::size_t candidate_init,
                  std::size_t lead);

double similarity(const ForecastTensor& forecasts, const SigmaTensor& sigma,
                  const AnEnConfig& cfg, std::size_t location,
                  std::size_t target_init, std::size_t candidate_init,
                  std::size_t lead);

struct Analog {
  std::size_t search_init = 0;  // index into the forecast init axis
  double distance = 0.0;

  friend bool operator==(const Analog&, const Analog&) = default;
};

/// Ranked analog lists per (location, test init, lead).
class AnalogIndexSet {
 public:
  AnalogIndexSet() = default;
  AnalogIndexSet(std::size_t locations, std::vector<std::size_t> test_inits,
                 std::size_t leads, std::size_t members);

  std::size_t locations() const noexcept { return locations_; }
  std::size_t tests() const noexcept { return test_inits_.size(); }
  std::size_t leads() const noexcept { return leads_; }
  std::size_t members() const noexcept { return members_; }
  const std::vector<std::size_t>& test_inits() const noexcept { return test_inits_; }

  std::span<const Analog> at(std::size_t location, std::size_t test,
                             std::size_t lead) const;
  void assign(std::size_t location, std::size_t test, std::size_t lead,
              std::span<const Analog> analogs);

  friend bool operator==(const AnalogIndexSet&, const AnalogIndexSet&) = default;

 private:
  std::size_t cell(std::size_t location, std::size_t test, std::size_t lead) const;

  std::size_t locations_ = 0;
  std::vector<std::size_t> test_inits_;
  std::size_t leads_ = 0;
  std::size_t members_ = 0;
  std::vector<Analog> slots_;
  std::vector<std::size_t> counts_;
};

/// Per-location weights; a single entry applies to every location.
using WeightTable = std::vector<WeightVector>;

struct SearchOptions {
  /// Optional per-location weights overriding cfg.weights.
  const WeightTable* location_weights = nullptr;
  /// Restrict to these location indices (empty = all).
  std::vector<std::size_t> only_locations;
  /// Worker threads for the location partition (0 or 1 = serial).
  std::size_t parallel = 1;
};

/// M nearest candidates per (location, test init, lead); ties broken by
/// earlier init. In operational mode candidates are every init from
/// search.begin that is strictly earlier than the test init.
AnalogIndexSet search_analogs(const ForecastTensor& forecasts,
                              const SigmaTensor& sigma, const AnEnConfig& cfg,
                              IndexRange test, IndexRange search,
                              const SearchOptions& options = {});

/// Gathers aligned observations of `variables` through one shared index set.
/// Output init axis holds the test inits; short lists leave missing members.
EnsembleTensor build_multivariate_ensemble(
    const AnalogIndexSet& indices, const AlignedObservations& aligned,
    const std::vector<std::string>& variables, const LocationSet& locations,
    const TimeAxis& forecast_inits, const LeadTimeAxis& leads);

/// Container kind "analogs": fields (search_index[, distance]) x L x T x J x M
/// with the source init axis and the test init indices as integer axes.
void write_analogs(const AnalogIndexSet& set, const TimeAxis& forecast_inits,
                   const std::filesystem::path& path, bool with_distances);
AnalogIndexSet read_analogs(const std::filesystem::path& path);

void write_sigma(const SigmaTensor& sigma, const ForecastTensor& forecasts,
                 const std::filesystem::path& path);
SigmaTensor read_sigma(const std::filesystem::path& path);

}  // namespace anensolar
