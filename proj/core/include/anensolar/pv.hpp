#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "anensolar/solar.hpp"
#include "anensolar/tensors.hpp"

namespace anensolar {

struct WeatherSample {
  double ghi = 0.0;           // W/m^2
  double albedo = 0.0;        // fraction
  double ambient_temp = 0.0;  // deg C
  double wind_speed = 0.0;    // m/s
};

struct IrradianceComponents {
  double dni = 0.0;
  double dhi = 0.0;
  double kt = 0.0;
};

struct PoaIrradiance {
  double direct = 0.0;
  double sky_diffuse = 0.0;
  double ground_diffuse = 0.0;
  double global = 0.0;
};

struct PvModuleSpec {
  std::string code;
  double area = 0.0;  // m^2
  std::string material;
  int cells_in_series = 0;
  double stc_rating = 0.0;  // W
  double efficiency = 0.0;  // percent
  double gamma = -0.0045;   // 1/degC
  double a = -3.56;
  double b = -0.075;        // s/m
  double delta_t = 3.0;     // degC

  void validate() const;
};

struct SystemConfig {
  double capacity = 10'000.0;  // W
  double tilt = 0.0;           // degrees
  double azimuth = 180.0;      // degrees, 180 = equator-facing (north hemisphere)

  void validate() const;
};

// DISC validity domain.
inline constexpr double kDiscMaxZenith = 87.5;
inline constexpr double kDiscMaxClearness = 1.1;
inline constexpr double kDiscMaxAirmass = 12.0;

/// DISC decomposition of GHI into DNI and DHI.
IrradianceComponents disc_decompose(double ghi, double apparent_zenith, double e0n,
                                    double airmass);
IrradianceComponents disc_decompose(double ghi, const SolarCell& cell);

/// Hay-Davies plane-of-array transposition.
PoaIrradiance transpose_poa(const IrradianceComponents& comp, double ghi, double albedo,
                            const SolarCell& cell, const SystemConfig& sys);

/// SAPM-style module + cell temperature.
double cell_temperature(double poa_global, double ambient_temp, double wind_speed,
                        const PvModuleSpec& spec);

/// Linear temperature-corrected module power, floored at zero.
double module_power(double poa_global, double t_cell, const PvModuleSpec& spec);

/// Full chain for one sample, scaled to sys.capacity / spec.stc_rating modules.
double simulate_system(const WeatherSample& weather, const SolarCell& cell,
                       const PvModuleSpec& spec, const SystemConfig& sys);

/// Names (and units) of the ensemble variables feeding the chain.
struct WeatherVariables {
  std::string ghi = "dswrf";
  std::string albedo = "al";
  std::string temperature = "2t";
  std::string wind_u = "10u";
  std::string wind_v = "10v";
  bool albedo_percent = true;
  bool temperature_kelvin = true;

  std::vector<std::string> names() const {
    return {ghi, albedo, temperature, wind_u, wind_v};
  }
};

/// Power per member for every module; output variables are module codes.
/// Astronomy comes only from `cache`, looked up by init time.
EnsembleTensor simulate_ensemble(const EnsembleTensor& weather,
                                 const SolarCacheTable& cache,
                                 const std::vector<PvModuleSpec>& specs,
                                 const SystemConfig& sys,
                                 const WeatherVariables& vars = {},
                                 std::size_t parallel = 1);

/// Module spec file: delimited text with a header naming PvModuleSpec
/// fields; unknown columns are ignored.
std::vector<PvModuleSpec> parse_module_catalog(std::string_view text);
std::vector<PvModuleSpec> read_module_catalog(const std::filesystem::path& path);
void write_module_catalog(const std::vector<PvModuleSpec>& specs,
                          const std::filesystem::path& path);

/// The 11 bundled modules (SP128 ... KS20).
const std::vector<PvModuleSpec>& bundled_module_catalog();
const PvModuleSpec& find_module(const std::vector<PvModuleSpec>& specs,
                                std::string_view code);

}  // namespace anensolar
