#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anensolar/solar.hpp"
#include "anensolar/tensors.hpp"

namespace anensolar {

/// Root-mean-square error over pairs where both values are present.
double rmse(std::span<const double> pred, std::span<const double> truth);
/// mean(pred - truth); negative means under-prediction.
double bias(std::span<const double> pred, std::span<const double> truth);

/// Empirical CRPS: mean |x_i - y| - (1 / 2M^2) sum_ij |x_i - x_j|.
double crps(std::span<const double> members, double truth);

/// Population standard deviation of the members.
double ensemble_spread(std::span<const double> members);

/// Per-location shift that puts the lead of minimum mean apparent zenith
/// (averaged over inits) at `noon_slot`.
struct SolarNoonAlignment {
  std::size_t noon_slot = 12;
  std::size_t lead_count = 0;
  std::vector<std::ptrdiff_t> offset;  // per location: noon lead - noon_slot

  /// Aligned slot of lead `lead` at `location`, empty outside [0, lead_count).
  std::optional<std::size_t> slot(std::size_t location, std::size_t lead) const;
};

SolarNoonAlignment align_solar_noon(const SolarCacheTable& cache, std::size_t noon_slot = 12);

/// location id -> region label; unmapped locations are excluded.
using RegionMap = std::map<std::size_t, std::string>;
RegionMap read_region_map(const std::filesystem::path& path);

enum class Grouping { all, lead, location, region, season, daypart };
Grouping parse_grouping(std::string_view key);
std::string_view to_string(Grouping g);

/// Season label (DJF/MAM/JJA/SON) of a UTC instant.
std::string_view season_of(EpochSeconds t);
/// morning (8-10), noon (11-13), afternoon (14-16) on aligned slots.
std::optional<std::string_view> daypart_of(std::size_t slot);

struct VerifyRow {
  std::string group;
  double rmse = 0.0;
  double bias = 0.0;
  double crps = 0.0;
  double spread = 0.0;
  std::size_t count = 0;
};

struct VerifyReport {
  Grouping grouping = Grouping::all;
  std::vector<VerifyRow> rows;
};

struct VerifyInputs {
  const EnsembleTensor* forecast = nullptr;  // M members
  const EnsembleTensor* truth = nullptr;     // member 0 used; inits matched by time
  std::string variable;                      // forecast variable (e.g. module code)
  std::string truth_variable;                // defaults to `variable`
  const SolarCacheTable* cache = nullptr;    // night gate and alignment source
};

/// Groups daylight cells (cache zenith < 90) with finite truth and at
/// least one finite member; each row averages squared error of the
/// ensemble mean, its bias, CRPS and spread over its cells.
VerifyReport aggregate(const VerifyInputs& inputs, Grouping grouping,
                       const RegionMap* regions = nullptr,
                       const SolarNoonAlignment* alignment = nullptr);

void write_report_csv(const VerifyReport& report, const std::filesystem::path& path);
VerifyReport read_report_csv(const std::filesystem::path& path);

struct SignificanceResult {
  bool significant = false;
  double p_value = 1.0;
  double statistic = 0.0;  // W+ (sum of positive ranks)
  std::size_t nonzero = 0;
};

/// Two-sided Wilcoxon signed-rank test on the paired squared-error
/// differences a_k^2 - b_k^2. Exact null distribution when there are no
/// ties and at most 50 nonzero differences, normal approximation otherwise.
SignificanceResult paired_significance(std::span<const double> errors_a,
                                       std::span<const double> errors_b,
                                       double level = 0.05);

}  // namespace anensolar
