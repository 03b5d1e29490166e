#include "anensolar/pv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "anensolar/error.hpp"
#include "anensolar/parallel.hpp"

namespace anensolar {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
// Lower bound on cos(zenith) in the Hay-Davies beam ratio.
constexpr double kRbMinCosZenith = 0.01745;

}  // namespace

void PvModuleSpec::validate() const {
  if (!(stc_rating > 0.0)) {
    throw Error(Errc::invalid_argument, "module " + code + ": stc_rating must be > 0");
  }
  if (!(area > 0.0)) {
    throw Error(Errc::invalid_argument, "module " + code + ": area must be > 0");
  }
}

void SystemConfig::validate() const {
  if (!(capacity > 0.0)) throw Error(Errc::invalid_argument, "system.capacity must be > 0");
  if (!(tilt >= 0.0 && tilt <= 90.0)) {
    throw Error(Errc::invalid_argument, "system.tilt must lie in [0, 90]");
  }
}

IrradianceComponents disc_decompose(double ghi, double zenith, double e0n,
                                    double airmass) {
  IrradianceComponents out;
  if (!(ghi > 0.0) || !(zenith < 90.0)) {
    out.dhi = std::max(ghi, 0.0);
    return out;
  }
  const double cosz = std::cos(zenith * kDeg);
  out.kt = std::clamp(ghi / (e0n * cosz), 0.0, kDiscMaxClearness);
  if (zenith >= kDiscMaxZenith) {
    out.dhi = ghi;
    return out;
  }

  const double kt = out.kt;
  const double am = std::min(airmass, kDiscMaxAirmass);
  double a, b, c;
  if (kt <= 0.6) {
    a = 0.512 - 1.56 * kt + 2.286 * kt * kt - 2.222 * kt * kt * kt;
    b = 0.370 + 0.962 * kt;
    c = -0.280 + 0.932 * kt - 2.048 * kt * kt;
  } else {
    a = -5.743 + 21.77 * kt - 27.49 * kt * kt + 11.56 * kt * kt * kt;
    b = 41.40 - 118.5 * kt + 66.05 * kt * kt + 31.90 * kt * kt * kt;
    c = -47.01 + 184.2 * kt - 222.0 * kt * kt + 73.81 * kt * kt * kt;
  }
  const double delta_kn = a + b * std::exp(c * am);
  const double knc = 0.866 - 0.122 * am + 0.0121 * am * am -
                     0.000653 * am * am * am + 0.000014 * am * am * am * am;
  const double kn = knc - delta_kn;

  // DNI may not exceed e0n nor put more beam on the horizontal than GHI.
  out.dni = std::clamp(kn * e0n, 0.0, std::min(e0n, ghi / cosz));
  out.dhi = std::max(ghi - out.dni * cosz, 0.0);
  return out;
}

IrradianceComponents disc_decompose(double ghi, const SolarCell& cell) {
  return disc_decompose(ghi, cell.position.apparent_zenith, cell.e0n, cell.airmass);
}

PoaIrradiance transpose_poa(const IrradianceComponents& comp, double ghi, double albedo,
                            const SolarCell& cell, const SystemConfig& sys) {
  PoaIrradiance poa;
  const double z = cell.position.apparent_zenith;
  if (!(z < 90.0)) return poa;
  const double cosz = std::cos(z * kDeg);
  const double sinz = std::sin(z * kDeg);
  const double cosb = std::cos(sys.tilt * kDeg);
  const double sinb = std::sin(sys.tilt * kDeg);
  const double cos_aoi = std::clamp(
      cosz * cosb + sinz * sinb * std::cos((cell.position.azimuth - sys.azimuth) * kDeg),
      -1.0, 1.0);
  const double beam_proj = std::max(cos_aoi, 0.0);

  poa.direct = comp.dni * beam_proj;
  const double ai = comp.dni / cell.e0n;
  const double rb = beam_proj / std::max(cosz, kRbMinCosZenith);
  poa.sky_diffuse = comp.dhi * ((1.0 - ai) * (1.0 + cosb) / 2.0 + ai * rb);
  poa.ground_diffuse = ghi * albedo * (1.0 - cosb) / 2.0;
  poa.global = poa.direct + poa.sky_diffuse + poa.ground_diffuse;
  return poa;
}

double cell_temperature(double poa_global, double ambient_temp, double wind_speed,
                        const PvModuleSpec& spec) {
  const double t_module =
      poa_global * std::exp(spec.a + spec.b * wind_speed) + ambient_temp;
  return t_module + poa_global / 1000.0 * spec.delta_t;
}

double module_power(double poa_global, double t_cell, const PvModuleSpec& spec) {
  const double p =
      spec.stc_rating * (poa_global / 1000.0) * (1.0 + spec.gamma * (t_cell - 25.0));
  return std::max(p, 0.0);
}

double simulate_system(const WeatherSample& w, const SolarCell& cell,
                       const PvModuleSpec& spec, const SystemConfig& sys) {
  if (is_missing(w.ghi) || is_missing(w.albedo) || is_missing(w.ambient_temp) ||
      is_missing(w.wind_speed)) {
    return kMissing;
  }
  if (!(cell.position.apparent_zenith < 90.0) || !(w.ghi > 0.0)) return 0.0;
  const auto comp = disc_decompose(w.ghi, cell);
  const auto poa = transpose_poa(comp, w.ghi, w.albedo, cell, sys);
  const double tc = cell_temperature(poa.global, w.ambient_temp, w.wind_speed, spec);
  return module_power(poa.global, tc, spec) * (sys.capacity / spec.stc_rating);
}

EnsembleTensor simulate_ensemble(const EnsembleTensor& weather,
                                 const SolarCacheTable& cache,
                                 const std::vector<PvModuleSpec>& specs,
                                 const SystemConfig& sys, const WeatherVariables& vars,
                                 std::size_t parallel) {
  sys.validate();
  if (specs.empty()) throw Error(Errc::invalid_argument, "no PV modules given");
  for (const auto& s : specs) s.validate();

  std::size_t idx[5];
  const auto names = vars.names();
  for (std::size_t k = 0; k < 5; ++k) {
    auto v = weather.variable_index(names[k]);
    if (!v) {
      throw Error(Errc::unknown_variable,
                  "ensemble lacks required variable '" + names[k] + "'");
    }
    idx[k] = *v;
  }
  if (!(cache.locations() == weather.locations) ||
      !(cache.lead_times() == weather.lead_times)) {
    throw Error(Errc::dimension_mismatch,
                "solar cache locations/leads do not match the ensemble");
  }
  std::vector<std::size_t> cache_init(weather.init_times.size());
  for (std::size_t i = 0; i < cache_init.size(); ++i) {
    auto found = cache.init_times().find(weather.init_times[i]);
    if (!found) {
      throw Error(Errc::dimension_mismatch, "solar cache lacks init time " +
                                                std::to_string(weather.init_times[i]));
    }
    cache_init[i] = *found;
  }

  std::vector<std::string> codes;
  for (const auto& s : specs) codes.push_back(s.code);
  const std::size_t nl = weather.locations.size(), ni = weather.init_times.size(),
                    nj = weather.lead_times.size(), nm = weather.members();
  auto out = EnsembleTensor::make(codes, weather.locations, weather.init_times,
                                  weather.lead_times, nm);

  parallel_for(nl, parallel, [&](std::size_t l) {
    for (std::size_t i = 0; i < ni; ++i) {
      for (std::size_t j = 0; j < nj; ++j) {
        const SolarCell& cell = cache.at(l, cache_init[i], j);
        for (std::size_t m = 0; m < nm; ++m) {
          WeatherSample w;
          w.ghi = weather.values(idx[0], l, i, j, m);
          w.albedo = weather.values(idx[1], l, i, j, m);
          if (vars.albedo_percent) w.albedo /= 100.0;
          w.ambient_temp = weather.values(idx[2], l, i, j, m);
          if (vars.temperature_kelvin) w.ambient_temp -= 273.15;
          w.wind_speed = std::hypot(weather.values(idx[3], l, i, j, m),
                                    weather.values(idx[4], l, i, j, m));
          for (std::size_t s = 0; s < specs.size(); ++s) {
            out.values(s, l, i, j, m) = simulate_system(w, cell, specs[s], sys);
          }
        }
      }
    }
  });
  return out;
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& field) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(Errc::invalid_argument, "module catalog: bad " + field + " '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<PvModuleSpec> parse_module_catalog(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> header;
  std::vector<PvModuleSpec> specs;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    auto row = split_row(line);
    if (header.empty()) {
      header = row;
      for (const char* required : {"code", "area", "stc_rating"}) {
        if (std::find(header.begin(), header.end(), required) == header.end()) {
          throw Error(Errc::malformed_header,
                      std::string("module catalog lacks column '") + required + "'");
        }
      }
      continue;
    }
    if (row.size() != header.size()) {
      throw Error(Errc::dimension_mismatch, "module catalog row has wrong column count");
    }
    PvModuleSpec s;
    for (std::size_t k = 0; k < header.size(); ++k) {
      const auto& h = header[k];
      const auto& v = row[k];
      if (h == "code") s.code = v;
      else if (h == "area") s.area = to_double(v, h);
      else if (h == "material") s.material = v;
      else if (h == "cells_in_series") s.cells_in_series = static_cast<int>(to_double(v, h));
      else if (h == "stc_rating") s.stc_rating = to_double(v, h);
      else if (h == "efficiency") s.efficiency = to_double(v, h);
      else if (h == "gamma") s.gamma = to_double(v, h);
      else if (h == "a") s.a = to_double(v, h);
      else if (h == "b") s.b = to_double(v, h);
      else if (h == "delta_t" || h == "deltaT") s.delta_t = to_double(v, h);
    }
    s.validate();
    specs.push_back(std::move(s));
  }
  return specs;
}

std::vector<PvModuleSpec> read_module_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_module_catalog(ss.str());
}

void write_module_catalog(const std::vector<PvModuleSpec>& specs,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  out.precision(17);
  out << "code,area,material,cells_in_series,stc_rating,efficiency,gamma,a,b,delta_t\n";
  for (const auto& s : specs) {
    out << s.code << ',' << s.area << ',' << s.material << ',' << s.cells_in_series
        << ',' << s.stc_rating << ',' << s.efficiency << ',' << s.gamma << ','
        << s.a << ',' << s.b << ',' << s.delta_t << '\n';
  }
}

extern const char* const kBundledModuleCatalog;

const std::vector<PvModuleSpec>& bundled_module_catalog() {
  static const std::vector<PvModuleSpec> catalog =
      parse_module_catalog(kBundledModuleCatalog);
  return catalog;
}

const PvModuleSpec& find_module(const std::vector<PvModuleSpec>& specs,
                                std::string_view code) {
  for (const auto& s : specs) {
    if (s.code == code) return s;
  }
  throw Error(Errc::unknown_variable, "unknown PV module '" + std::string(code) + "'");
}

}  // namespace anensolar
