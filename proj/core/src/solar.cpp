#include "anensolar/solar.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <utility>

#include "anensolar/error.hpp"
#include "anensolar/io.hpp"
#include "anensolar/parallel.hpp"

namespace anensolar {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double sind(double d) { return std::sin(d * kDeg); }
double cosd(double d) { return std::cos(d * kDeg); }
double tand(double d) { return std::tan(d * kDeg); }

double wrap360(double d) {
  d = std::fmod(d, 360.0);
  return d < 0 ? d + 360.0 : d;
}

// Atmospheric refraction (degrees) for a true elevation, NOAA piecewise form.
double refraction(double elevation) {
  if (elevation > 85.0) return 0.0;
  double arcsec;
  if (elevation > 5.0) {
    const double t = tand(elevation);
    arcsec = 58.1 / t - 0.07 / (t * t * t) + 0.000086 / std::pow(t, 5);
  } else if (elevation > -0.575) {
    const double e = elevation;
    arcsec = 1735.0 + e * (-518.2 + e * (103.4 + e * (-12.79 + e * 0.711)));
  } else {
    arcsec = -20.772 / tand(elevation);
  }
  return arcsec / 3600.0;
}

}  // namespace

double fractional_day_of_year(EpochSeconds time) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{time}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const sys_days jan1{ymd.year() / January / 1};
  return static_cast<double>((tp - sys_seconds{jan1}).count()) / 86400.0 + 1.0;
}

SolarPosition solar_position(EpochSeconds time, double latitude, double longitude) {
  const double jd = static_cast<double>(time) / 86400.0 + 2440587.5;
  const double T = (jd - 2451545.0) / 36525.0;

  const double mean_long = wrap360(280.46646 + T * (36000.76983 + T * 0.0003032));
  const double mean_anom = 357.52911 + T * (35999.05029 - 0.0001537 * T);
  const double ecc = 0.016708634 - T * (0.000042037 + 0.0000001267 * T);
  const double center = sind(mean_anom) * (1.914602 - T * (0.004817 + 0.000014 * T)) +
                        sind(2 * mean_anom) * (0.019993 - 0.000101 * T) +
                        sind(3 * mean_anom) * 0.000289;
  const double true_long = mean_long + center;
  const double omega = 125.04 - 1934.136 * T;
  const double app_long = true_long - 0.00569 - 0.00478 * sind(omega);
  const double obliq_mean =
      23.0 + (26.0 + (21.448 - T * (46.815 + T * (0.00059 - T * 0.001813))) / 60.0) / 60.0;
  const double obliq = obliq_mean + 0.00256 * cosd(omega);
  const double decl = std::asin(sind(obliq) * sind(app_long)) / kDeg;

  const double y = tand(obliq / 2) * tand(obliq / 2);
  const double eot = 4.0 / kDeg *
                     (y * sind(2 * mean_long) - 2 * ecc * sind(mean_anom) +
                      4 * ecc * y * sind(mean_anom) * cosd(2 * mean_long) -
                      0.5 * y * y * sind(4 * mean_long) -
                      1.25 * ecc * ecc * sind(2 * mean_anom));

  const double minutes_of_day =
      static_cast<double>(((time % 86400) + 86400) % 86400) / 60.0;
  double tst = std::fmod(minutes_of_day + eot + 4.0 * longitude, 1440.0);
  if (tst < 0) tst += 1440.0;
  const double hour_angle = tst / 4.0 - 180.0;

  double cos_zen = sind(latitude) * sind(decl) +
                   cosd(latitude) * cosd(decl) * cosd(hour_angle);
  cos_zen = std::clamp(cos_zen, -1.0, 1.0);
  const double zenith = std::acos(cos_zen) / kDeg;

  const double az = std::atan2(sind(hour_angle),
                               cosd(hour_angle) * sind(latitude) -
                                   tand(decl) * cosd(latitude)) /
                        kDeg +
                    180.0;

  const double elevation = 90.0 - zenith;
  double apparent = 90.0 - (elevation + refraction(elevation));
  apparent = std::clamp(apparent, 0.0, 180.0);

  SolarPosition p;
  p.apparent_zenith = apparent;
  p.azimuth = wrap360(az);
  if (p.azimuth >= 360.0) p.azimuth = 0.0;
  p.declination = decl;
  p.equation_of_time = eot;
  return p;
}

double extraterrestrial_normal(EpochSeconds time, EarthSunCorrection form,
                               double solar_constant) {
  const double doy = fractional_day_of_year(time);
  double r;
  if (form == EarthSunCorrection::simple_cosine) {
    r = 1.0 + 0.033 * std::cos(2.0 * std::numbers::pi * doy / 365.0);
  } else {
    const double b = 2.0 * std::numbers::pi * (doy - 1.0) / 365.0;
    r = 1.00011 + 0.034221 * std::cos(b) + 0.00128 * std::sin(b) +
        0.000719 * std::cos(2 * b) + 0.000077 * std::sin(2 * b);
  }
  return solar_constant * r;
}

double relative_airmass(double z) {
  if (!(z < 90.0)) return kMissing;
  return 1.0 / (cosd(z) + 0.50572 * std::pow(96.07995 - z, -1.6364));
}

SolarCacheTable::SolarCacheTable(LocationSet locations, TimeAxis inits, LeadTimeAxis leads)
    : locations_(std::move(locations)),
      inits_(std::move(inits)),
      leads_(std::move(leads)),
      cells_(locations_.size() * inits_.size() * leads_.size()) {}

const SolarCell& SolarCacheTable::at(std::size_t l, std::size_t i, std::size_t j) const {
  if (l >= locations_.size() || i >= inits_.size() || j >= leads_.size()) {
    throw std::out_of_range("solar cache index out of range");
  }
  return cells_[(l * inits_.size() + i) * leads_.size() + j];
}

SolarCell& SolarCacheTable::at(std::size_t l, std::size_t i, std::size_t j) {
  return const_cast<SolarCell&>(std::as_const(*this).at(l, i, j));
}

bool SolarCacheTable::covers(const LocationSet& locations, const TimeAxis& inits,
                             const LeadTimeAxis& leads) const {
  return locations_ == locations && inits_ == inits && leads_ == leads;
}

bool operator==(const SolarCacheTable& a, const SolarCacheTable& b) {
  if (!a.covers(b.locations_, b.inits_, b.leads_)) return false;
  for (std::size_t k = 0; k < a.cells_.size(); ++k) {
    const auto& x = a.cells_[k];
    const auto& y = b.cells_[k];
    const double xs[] = {x.position.apparent_zenith, x.position.azimuth,
                         x.position.declination, x.position.equation_of_time,
                         x.e0n, x.airmass};
    const double ys[] = {y.position.apparent_zenith, y.position.azimuth,
                         y.position.declination, y.position.equation_of_time,
                         y.e0n, y.airmass};
    for (int f = 0; f < 6; ++f) {
      if (is_missing(xs[f]) != is_missing(ys[f])) return false;
      if (!is_missing(xs[f]) && xs[f] != ys[f]) return false;
    }
  }
  return true;
}

SolarCacheTable precompute_solar(const LocationSet& locations, const TimeAxis& inits,
                                 const LeadTimeAxis& leads, EarthSunCorrection form,
                                 std::size_t parallel) {
  SolarCacheTable table(locations, inits, leads);
  parallel_for(locations.size(), parallel, [&](std::size_t l) {
    const auto& loc = locations[l];
    for (std::size_t i = 0; i < inits.size(); ++i) {
      for (std::size_t j = 0; j < leads.size(); ++j) {
        const EpochSeconds t = inits[i] + leads[j];
        auto& cell = table.at(l, i, j);
        cell.position = solar_position(t, loc.latitude, loc.longitude);
        cell.e0n = extraterrestrial_normal(t, form);
        cell.airmass = relative_airmass(cell.position.apparent_zenith);
      }
    }
  });
  return table;
}

namespace {
constexpr const char* kSolarFields[] = {"apparent_zenith", "azimuth", "declination",
                                        "equation_of_time", "e0n", "airmass"};
}

void write_solar_cache(const SolarCacheTable& table, const std::filesystem::path& path) {
  const std::size_t nl = table.locations().size(), ni = table.init_times().size(),
                    nj = table.lead_times().size();
  Container c;
  c.kind = "solar";
  c.shape = {6, nl, ni, nj};
  c.names.assign(std::begin(kSolarFields), std::end(kSolarFields));
  c.locations = table.locations();
  c.axes.emplace_back("init_times", table.init_times().values());
  c.axes.emplace_back("lead_times", table.lead_times().values());
  Array<4> a({6, nl, ni, nj});
  for (std::size_t l = 0; l < nl; ++l)
    for (std::size_t i = 0; i < ni; ++i)
      for (std::size_t j = 0; j < nj; ++j) {
        const auto& cell = table.at(l, i, j);
        a(0, l, i, j) = cell.position.apparent_zenith;
        a(1, l, i, j) = cell.position.azimuth;
        a(2, l, i, j) = cell.position.declination;
        a(3, l, i, j) = cell.position.equation_of_time;
        a(4, l, i, j) = cell.e0n;
        a(5, l, i, j) = cell.airmass;
      }
  c.payload.assign(a.data().begin(), a.data().end());
  write_container(c, path);
}

SolarCacheTable read_solar_cache(const std::filesystem::path& path) {
  auto c = read_container(path);
  c.expect_kind("solar");
  if (!c.locations || c.shape.size() != 4 || c.shape[0] != 6) {
    throw Error(Errc::dimension_mismatch, "solar cache container malformed");
  }
  SolarCacheTable table(*c.locations, TimeAxis(c.axis("init_times")),
                        LeadTimeAxis(c.axis("lead_times")));
  if (c.shape[1] != table.locations().size() || c.shape[2] != table.init_times().size() ||
      c.shape[3] != table.lead_times().size()) {
    throw Error(Errc::dimension_mismatch, "solar cache shape does not match axes");
  }
  Array<4> a({c.shape[0], c.shape[1], c.shape[2], c.shape[3]});
  std::copy(c.payload.begin(), c.payload.end(), a.data().begin());
  for (std::size_t l = 0; l < c.shape[1]; ++l)
    for (std::size_t i = 0; i < c.shape[2]; ++i)
      for (std::size_t j = 0; j < c.shape[3]; ++j) {
        auto& cell = table.at(l, i, j);
        cell.position = {a(0, l, i, j), a(1, l, i, j), a(2, l, i, j), a(3, l, i, j)};
        cell.e0n = a(4, l, i, j);
        cell.airmass = a(5, l, i, j);
      }
  return table;
}

}  // namespace anensolar
