#include "anensolar/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "anensolar/error.hpp"
#include "anensolar/parallel.hpp"
#include "anensolar/random.hpp"
#include "anensolar/solar.hpp"

namespace anensolar {

namespace {

enum Var : std::size_t { kGhi, kAlbedo, kPressure, kOrography, kTemp, kWindU, kWindV, kCloud, kVarCount };

std::vector<int> default_leads() {
  std::vector<int> h(24);
  for (int k = 0; k < 24; ++k) h[static_cast<std::size_t>(k)] = k;
  return h;
}

// Stationary AR(1) parameterized by its marginal standard deviation.
class Ar1 {
 public:
  Ar1(Rng& rng, double phi, double marginal_sd)
      : rng_(rng), phi_(phi), innov_(marginal_sd * std::sqrt(1.0 - phi * phi)) {
    x_ = marginal_sd * rng_.normal();
  }
  double next() {
    const double v = x_;
    x_ = phi_ * x_ + innov_ * rng_.normal();
    return v;
  }

 private:
  Rng& rng_;
  double phi_, innov_, x_;
};

}  // namespace

const std::vector<std::string>& synth_variables() {
  static const std::vector<std::string> names{"dswrf", "al", "sp", "orog", "2t", "10u", "10v", "tcc"};
  return names;
}

void SynthConfig::validate() const {
  std::vector<std::string> problems;
  if (locations.empty()) problems.push_back("locations: at least one location required");
  if (days < 1) problems.push_back("days: must be at least 1");
  if (start % 86400 != 0) problems.push_back("start: must be a UTC midnight");
  if (init_hour < 0 || init_hour > 23) problems.push_back("init_hour: must lie in [0, 23]");
  if (!(ar_phi >= 0.0 && ar_phi < 1.0)) problems.push_back("ar_phi: must lie in [0, 1)");
  if (!(cloud_noise >= 0.0)) problems.push_back("cloud_noise: must be >= 0");
  if (!(transmittance > 0.0 && transmittance <= 1.0)) {
    problems.push_back("transmittance: must lie in (0, 1]");
  }
  for (std::size_t k = 0; k < lead_hours.size(); ++k) {
    if (lead_hours[k] < 0 || (k > 0 && lead_hours[k] <= lead_hours[k - 1])) {
      problems.push_back("lead_hours: must be non-negative and strictly increasing");
      break;
    }
  }
  const auto& known = synth_variables();
  auto check_errors = [&](const std::map<std::string, ErrorModel>& errs, const std::string& where) {
    for (const auto& [name, e] : errs) {
      if (std::find(known.begin(), known.end(), name) == known.end()) {
        problems.push_back(where + ": unknown variable '" + name + "'");
      }
      if (!(e.noise >= 0.0)) problems.push_back(where + "." + name + ".noise: must be >= 0");
      if (!std::isfinite(e.bias)) problems.push_back(where + "." + name + ".bias: must be finite");
    }
  };
  check_errors(errors, "errors");
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    check_errors(regimes[r].errors, "regimes[" + std::to_string(r) + "].errors");
  }
  if (!regime_of_location.empty()) {
    if (regime_of_location.size() != locations.size()) {
      problems.push_back("regime_of_location: one entry per location required");
    }
    const std::size_t nr = std::max<std::size_t>(regimes.size(), 1);
    for (auto r : regime_of_location) {
      if (r >= nr) {
        problems.push_back("regime_of_location: regime " + std::to_string(r) + " not defined");
        break;
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid synth config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(Errc::invalid_argument, msg);
  }
}

std::vector<Location> grid_locations(std::size_t rows, std::size_t cols, double lat0,
                                     double lat1, double lon0, double lon1,
                                     double (*elevation)(double, double)) {
  if (rows < 1 || cols < 1) throw Error(Errc::invalid_argument, "grid needs rows, cols >= 1");
  std::vector<Location> out;
  out.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double lat = rows == 1 ? lat0 : lat0 + (lat1 - lat0) * static_cast<double>(r) /
                                                     static_cast<double>(rows - 1);
    for (std::size_t c = 0; c < cols; ++c) {
      const double lon = cols == 1 ? lon0 : lon0 + (lon1 - lon0) * static_cast<double>(c) /
                                                       static_cast<double>(cols - 1);
      out.push_back({out.size(), lat, lon, elevation ? elevation(lat, lon) : 0.0});
    }
  }
  return out;
}

SynthOutput generate(const SynthConfig& cfg_in) {
  SynthConfig cfg = cfg_in;
  if (cfg.lead_hours.empty()) cfg.lead_hours = default_leads();
  cfg.validate();

  const LocationSet locations(cfg.locations);
  const std::size_t nl = locations.size();
  const auto& names = synth_variables();

  std::vector<EpochSeconds> inits(cfg.days);
  for (std::size_t d = 0; d < cfg.days; ++d) {
    inits[d] = cfg.start + static_cast<EpochSeconds>(d) * 86400 + cfg.init_hour * 3600;
  }
  std::vector<std::int64_t> leads;
  for (int h : cfg.lead_hours) leads.push_back(static_cast<std::int64_t>(h) * 3600);

  const std::size_t hours =
      (cfg.days - 1) * 24 + static_cast<std::size_t>(cfg.init_hour + cfg.lead_hours.back()) + 1;
  std::vector<EpochSeconds> valid(hours);
  for (std::size_t h = 0; h < hours; ++h) valid[h] = cfg.start + static_cast<EpochSeconds>(h) * 3600;

  SynthOutput out;
  out.analysis = ObservationTensor::make(names, locations, TimeAxis(valid));
  out.forecasts = ForecastTensor::make(names, locations, TimeAxis(inits), LeadTimeAxis(leads));

  auto error_for = [&](std::size_t regime, Var v) {
    if (regime < cfg.regimes.size()) {
      auto it = cfg.regimes[regime].errors.find(names[v]);
      if (it != cfg.regimes[regime].errors.end()) return it->second;
    }
    auto it = cfg.errors.find(names[v]);
    return it == cfg.errors.end() ? ErrorModel{} : it->second;
  };

  parallel_for(nl, cfg.parallel, [&](std::size_t l) {
    const auto& loc = locations[l];
    const std::size_t regime = cfg.regime_of_location.empty() ? 0 : cfg.regime_of_location[l];
    const double cloud_offset = regime < cfg.regimes.size() ? cfg.regimes[regime].cloud_offset : 0.0;
    auto& an = out.analysis.values;

    Rng rng(derive_seed(cfg.seed, l, 1));
    Ar1 cloud(rng, cfg.ar_phi, cfg.ar_phi < 1.0 ? cfg.cloud_noise / std::sqrt(1.0 - cfg.ar_phi * cfg.ar_phi) : 0.0);
    Ar1 temp_anom(rng, 0.97, 1.5);
    Ar1 wind_u(rng, 0.9, 3.0);
    Ar1 wind_v(rng, 0.9, 3.0);
    Ar1 albedo_anom(rng, 0.99, 2.0);
    Ar1 pressure_anom(rng, 0.98, 300.0);

    std::vector<double> envelope(hours), cloud_frac(hours), e0n(hours);
    const double base_temp = 30.0 - 0.6 * (std::abs(loc.latitude) - 25.0) - 0.0065 * loc.elevation;
    const double season_sign = loc.latitude >= 0 ? 1.0 : -1.0;
    for (std::size_t h = 0; h < hours; ++h) {
      const EpochSeconds t = valid[h];
      const auto pos = solar_position(t, loc.latitude, loc.longitude);
      e0n[h] = extraterrestrial_normal(t);
      const double cz = std::cos(pos.apparent_zenith * std::numbers::pi / 180.0);
      envelope[h] = pos.apparent_zenith < 90.0 ? cfg.transmittance * e0n[h] * std::max(cz, 0.0) : 0.0;

      const double c = 1.0 / (1.0 + std::exp(-(cloud.next() + cloud_offset)));
      cloud_frac[h] = c;
      const double k = 1.0 - 0.95 * c;

      const double doy = fractional_day_of_year(t);
      const double solar_hour = std::fmod(static_cast<double>(t % 86400) / 3600.0 + loc.longitude / 15.0 + 48.0, 24.0);
      const double seasonal = -10.0 * season_sign * std::cos(2.0 * std::numbers::pi * (doy - 15.0) / 365.0);
      const double diurnal = 6.0 * k * std::cos(2.0 * std::numbers::pi * (solar_hour - 15.0) / 24.0);

      an(kGhi, l, h) = envelope[h] * k;
      an(kCloud, l, h) = 100.0 * c;
      an(kTemp, l, h) = 273.15 + base_temp + seasonal + diurnal + temp_anom.next();
      an(kWindU, l, h) = 2.0 + wind_u.next();
      an(kWindV, l, h) = wind_v.next();
      an(kAlbedo, l, h) = std::clamp(15.0 + 0.004 * loc.elevation + albedo_anom.next(), 5.0, 95.0);
      an(kPressure, l, h) = 101325.0 * std::exp(-loc.elevation / 8434.0) + pressure_anom.next();
      an(kOrography, l, h) = loc.elevation;
    }

    std::array<ErrorModel, kVarCount> err;
    for (std::size_t v = 0; v < kVarCount; ++v) err[v] = error_for(regime, static_cast<Var>(v));

    const std::size_t nj = leads.size();
    for (std::size_t i = 0; i < inits.size(); ++i) {
      Rng frng(derive_seed(cfg.seed, l, i, 2));
      const std::size_t h0 = i * 24 + static_cast<std::size_t>(cfg.init_hour);
      for (std::size_t v = 0; v < kVarCount; ++v) {
        for (std::size_t j = 0; j < nj; ++j) {
          const std::size_t h = h0 + static_cast<std::size_t>(cfg.lead_hours[j]);
          const double unit = v == kGhi ? envelope[h] : 1.0;
          const double z = frng.normal();
          double x = an(v, l, h) + err[v].bias * cloud_frac[h] * unit + err[v].noise * unit * z;
          switch (v) {
            case kGhi: x = std::clamp(x, 0.0, e0n[h]); break;
            case kCloud:
            case kAlbedo: x = std::clamp(x, 0.0, 100.0); break;
            case kPressure: x = std::max(x, 1.0); break;
            default: break;
          }
          out.forecasts.values(v, l, i, j) = x;
        }
      }
    }
  });
  return out;
}

}  // namespace anensolar
