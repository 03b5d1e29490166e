#pragma once

#include <cstddef>
#include <filesystem>

#include "anensolar/tensors.hpp"

namespace anensolar {

struct SolarPosition {
  double apparent_zenith = 0.0;   // degrees, refraction-corrected
  double azimuth = 0.0;           // degrees clockwise from north, [0, 360)
  double declination = 0.0;       // degrees
  double equation_of_time = 0.0;  // minutes
};

/// Low-precision (NOAA / Meeus) solar ephemeris; ~0.2 deg over 2000-2050.
SolarPosition solar_position(EpochSeconds time, double latitude, double longitude);

enum class EarthSunCorrection { spencer, simple_cosine };

inline constexpr double kSolarConstant = 1361.1;  // W/m^2

/// Fractional day of year, 1.0 at Jan 1 00:00 UTC.
double fractional_day_of_year(EpochSeconds time);

/// Extraterrestrial irradiance on a sun-normal plane, W/m^2.
double extraterrestrial_normal(EpochSeconds time,
                               EarthSunCorrection form = EarthSunCorrection::spencer,
                               double solar_constant = kSolarConstant);

/// Kasten-Young relative air mass; missing for zenith >= 90 deg.
double relative_airmass(double apparent_zenith_deg);

struct SolarCell {
  SolarPosition position;
  double e0n = 0.0;
  double airmass = kMissing;
};

/// Solar geometry for every (location, init, lead), computed once and
/// shared by all ensemble members and PV modules.
class SolarCacheTable {
 public:
  SolarCacheTable() = default;
  SolarCacheTable(LocationSet locations, TimeAxis inits, LeadTimeAxis leads);

  const SolarCell& at(std::size_t location, std::size_t init, std::size_t lead) const;
  SolarCell& at(std::size_t location, std::size_t init, std::size_t lead);

  const LocationSet& locations() const noexcept { return locations_; }
  const TimeAxis& init_times() const noexcept { return inits_; }
  const LeadTimeAxis& lead_times() const noexcept { return leads_; }
  std::size_t size() const noexcept { return cells_.size(); }

  /// Whether this table covers the given axes exactly.
  bool covers(const LocationSet& locations, const TimeAxis& inits,
              const LeadTimeAxis& leads) const;

  friend bool operator==(const SolarCacheTable& a, const SolarCacheTable& b);

 private:
  LocationSet locations_;
  TimeAxis inits_;
  LeadTimeAxis leads_;
  std::vector<SolarCell> cells_;
};

SolarCacheTable precompute_solar(const LocationSet& locations, const TimeAxis& inits,
                                 const LeadTimeAxis& leads,
                                 EarthSunCorrection form = EarthSunCorrection::spencer,
                                 std::size_t parallel = 1);

/// Container kind "solar": field x location x init x lead with fields
/// apparent_zenith, azimuth, declination, equation_of_time, e0n, airmass.
void write_solar_cache(const SolarCacheTable& table, const std::filesystem::path& path);
SolarCacheTable read_solar_cache(const std::filesystem::path& path);

}  // namespace anensolar
