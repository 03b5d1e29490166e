#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "anensolar/pv.hpp"
#include "anensolar/random.hpp"
#include "oracles.hpp"
#include "reference_values.hpp"
#include "test_helpers.hpp"

using namespace anensolar;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

SolarCell make_cell(double zenith, double azimuth, double e0n = 1361.1) {
  SolarCell c;
  c.position.apparent_zenith = zenith;
  c.position.azimuth = azimuth;
  c.e0n = e0n;
  c.airmass = zenith < 90.0 ? relative_airmass(zenith) : kMissing;
  return c;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1.0);
}

}  // namespace

TEST(Disc, BoundaryRules) {
  auto zero = disc_decompose(0.0, 30.0, 1361.1, relative_airmass(30.0));
  EXPECT_EQ(zero.dni, 0.0);
  EXPECT_EQ(zero.dhi, 0.0);
  auto grazing = disc_decompose(50.0, 89.0, 1361.1, relative_airmass(89.0));
  EXPECT_EQ(grazing.dni, 0.0);
  EXPECT_EQ(grazing.dhi, 50.0);
  auto night = disc_decompose(50.0, 95.0, 1361.1, kMissing);
  EXPECT_EQ(night.dni, 0.0);
}

TEST(Disc, FixedCaseMatchesReference) {
  const double am = relative_airmass(30.0);
  const auto got = disc_decompose(600.0, 30.0, 1400.0, am);
  const auto ref = oracle::disc(600.0, 30.0, 1400.0, am);
  EXPECT_LE(rel_err(got.dni, ref.dni), 1e-6);
  EXPECT_LE(rel_err(got.dhi, ref.dhi), 1e-6);
  EXPECT_LE(rel_err(got.kt, ref.kt), 1e-12);
}

TEST(Disc, DirectIndexMatchesPvlib) {
  // zenith 0 and e0n = 1024 make kt exactly representable
  for (const auto& r : refvals::kDiscKn) {
    const auto got = disc_decompose(r.kt * 1024.0, 0.0, 1024.0, r.airmass);
    EXPECT_NEAR(got.dni / 1024.0, std::max(r.kn, 0.0), 1e-9) << r.kt << " " << r.airmass;
  }
}

TEST(Disc, RandomDaylightMatchesReferenceAndCloses) {
  Rng rng(2024);
  for (int k = 0; k < 1000; ++k) {
    const double z = rng.uniform() * 87.4;
    const double e0n = 1310.0 + rng.uniform() * 100.0;
    const double ghi = rng.uniform() * 1.1 * e0n * std::cos(z * kDeg);
    const double am = relative_airmass(z);
    const auto got = disc_decompose(ghi, z, e0n, am);
    const auto ref = oracle::disc(ghi, z, e0n, am);
    EXPECT_LE(rel_err(got.dni, ref.dni), 1e-6);
    EXPECT_LE(rel_err(got.dhi, ref.dhi), 1e-6);
    EXPECT_GE(got.dni, 0.0);
    EXPECT_GE(got.dhi, 0.0);
    EXPECT_LE(got.dni, e0n);
    EXPECT_LE(std::abs(got.dni * std::cos(z * kDeg) + got.dhi - ghi), 1e-6 * std::max(ghi, 1.0));
  }
}

TEST(Transpose, HorizontalReducesToGhi) {
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const double z = rng.uniform() * 89.9;
    const auto cell = make_cell(z, rng.uniform() * 360.0);
    const double ghi = rng.uniform() * 1.1 * cell.e0n * std::cos(z * kDeg);
    const auto comp = disc_decompose(ghi, cell);
    const auto poa = transpose_poa(comp, ghi, rng.uniform(), cell, SystemConfig{});
    EXPECT_EQ(poa.ground_diffuse, 0.0);
    EXPECT_LE(std::abs(poa.global - ghi), 1e-6 * std::max(ghi, 1.0));
  }
}

TEST(Transpose, TiltedMatchesTermByTermEvaluation) {
  const double zenith = 40.0, sun_az = 150.0, tilt = 30.0, panel_az = 180.0;
  const auto cell = make_cell(zenith, sun_az, 1350.0);
  const IrradianceComponents comp{700.0, 120.0, 0.0};
  const double ghi = 700.0 * std::cos(zenith * kDeg) + 120.0;
  const double albedo = 0.2;

  // sun and panel-normal unit vectors in (east, north, up)
  auto unit = [](double zen, double az) {
    return std::array<double, 3>{std::sin(zen * kDeg) * std::sin(az * kDeg),
                                 std::sin(zen * kDeg) * std::cos(az * kDeg), std::cos(zen * kDeg)};
  };
  const auto s = unit(zenith, sun_az), n = unit(tilt, panel_az);
  const double cos_aoi = s[0] * n[0] + s[1] * n[1] + s[2] * n[2];
  const double direct = 700.0 * cos_aoi;
  const double ai = 700.0 / 1350.0;
  const double rb = cos_aoi / std::cos(zenith * kDeg);
  const double sky = 120.0 * ((1 - ai) * (1 + std::cos(tilt * kDeg)) / 2 + ai * rb);
  const double ground = ghi * albedo * (1 - std::cos(tilt * kDeg)) / 2;

  SystemConfig sys;
  sys.tilt = tilt;
  sys.azimuth = panel_az;
  const auto poa = transpose_poa(comp, ghi, albedo, cell, sys);
  EXPECT_NEAR(poa.direct, direct, 1e-9);
  EXPECT_NEAR(poa.sky_diffuse, sky, 1e-9);
  EXPECT_NEAR(poa.ground_diffuse, ground, 1e-9);
  EXPECT_NEAR(poa.global, direct + sky + ground, 1e-9);
}

TEST(Transpose, SunBehindPanelGivesNoBeam) {
  SystemConfig sys;
  sys.tilt = 60.0;
  sys.azimuth = 180.0;
  const auto cell = make_cell(70.0, 0.0);
  const auto poa = transpose_poa({500.0, 100.0, 0.0}, 271.0, 0.2, cell, sys);
  EXPECT_EQ(poa.direct, 0.0);
  EXPECT_GT(poa.sky_diffuse, 0.0);
}

TEST(CellTemperature, Values) {
  PvModuleSpec spec;
  EXPECT_EQ(cell_temperature(0.0, 17.5, 3.0, spec), 17.5);
  const double t = cell_temperature(1000.0, 25.0, 0.0, spec);
  EXPECT_DOUBLE_EQ(t, 25.0 + 1000.0 * std::exp(-3.56) + 3.0);
  EXPECT_NEAR(t, 56.4, 0.05);
  double prev = t;
  for (double wind = 1.0; wind <= 200.0; wind += 1.0) {
    const double tw = cell_temperature(1000.0, 25.0, wind, spec);
    EXPECT_LT(tw, prev);
    EXPECT_GT(tw, 25.0);
    prev = tw;
  }
  EXPECT_NEAR(prev, 28.0, 1e-3);  // only the conduction term remains
}

TEST(ModulePower, StcAndTemperatureDerate) {
  for (const auto& spec : bundled_module_catalog()) {
    EXPECT_EQ(module_power(1000.0, 25.0, spec), spec.stc_rating) << spec.code;
    EXPECT_EQ(module_power(0.0, 40.0, spec), 0.0);
  }
  PvModuleSpec spec;
  spec.stc_rating = 300.0;
  EXPECT_NEAR(module_power(1000.0, 35.0, spec), 0.955 * 300.0, 1e-9);
  EXPECT_EQ(module_power(1000.0, 1000.0, spec), 0.0);
}

TEST(SimulateSystem, ScalingAndComposition) {
  const auto& sp128 = find_module(bundled_module_catalog(), "SP128");
  SystemConfig sys;
  EXPECT_EQ(sys.capacity / sp128.stc_rating, 25.0);

  Rng rng(9);
  for (int k = 0; k < 200; ++k) {
    const auto cell = make_cell(rng.uniform() * 85.0, rng.uniform() * 360.0);
    WeatherSample w{rng.uniform() * 900.0, rng.uniform() * 0.5, rng.uniform() * 40.0 - 5.0,
                    rng.uniform() * 12.0};
    const auto comp = disc_decompose(w.ghi, cell);
    const auto poa = transpose_poa(comp, w.ghi, w.albedo, cell, sys);
    const double tc = cell_temperature(poa.global, w.ambient_temp, w.wind_speed, sp128);
    const double p = module_power(poa.global, tc, sp128);
    EXPECT_EQ(simulate_system(w, cell, sp128, sys), 25.0 * p);
  }
  EXPECT_EQ(simulate_system({0.0, 0.2, 20.0, 2.0}, make_cell(30.0, 180.0), sp128, sys), 0.0);
  EXPECT_EQ(simulate_system({300.0, 0.2, 20.0, 2.0}, make_cell(95.0, 180.0), sp128, sys), 0.0);
  EXPECT_TRUE(is_missing(simulate_system({kMissing, 0.2, 20.0, 2.0}, make_cell(30.0, 180.0), sp128, sys)));
}

TEST(SimulateEnsemble, MatchesScalarPathAndSharesWeather) {
  LocationSet locs({{0, 40.0, -100.0, 0}, {1, 35.0, -90.0, 0}});
  TimeAxis inits({1530403200, 1530489600});
  LeadTimeAxis leads({12 * 3600, 15 * 3600, 18 * 3600, 21 * 3600, 30 * 3600});
  const auto cache = precompute_solar(locs, inits, leads);
  WeatherVariables vars;
  auto ens = EnsembleTensor::make(vars.names(), locs, inits, leads, 3);
  Rng rng(4);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t m = 0; m < 3; ++m) {
          ens.values(0, l, i, j, m) = rng.uniform() * 800.0;
          ens.values(1, l, i, j, m) = rng.uniform() * 40.0;
          ens.values(2, l, i, j, m) = 273.15 + rng.uniform() * 30.0;
          ens.values(3, l, i, j, m) = rng.normal() * 4.0;
          ens.values(4, l, i, j, m) = rng.normal() * 4.0;
        }
  const auto& cat = bundled_module_catalog();
  std::vector<PvModuleSpec> specs{cat[0], cat[6]};
  const auto power = simulate_ensemble(ens, cache, specs, SystemConfig{}, vars);
  const auto power_par = simulate_ensemble(ens, cache, specs, SystemConfig{}, vars, 2);
  EXPECT_TRUE(power.values == power_par.values);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 5; ++j)
          for (std::size_t m = 0; m < 3; ++m) {
            WeatherSample w{ens.values(0, l, i, j, m), ens.values(1, l, i, j, m) / 100.0,
                            ens.values(2, l, i, j, m) - 273.15,
                            std::hypot(ens.values(3, l, i, j, m), ens.values(4, l, i, j, m))};
            EXPECT_EQ(power.values(s, l, i, j, m), simulate_system(w, cache.at(l, i, j), specs[s], SystemConfig{}));
          }
}

TEST(SimulateEnsemble, RequiresWeatherVariables) {
  LocationSet locs({{0, 40.0, -100.0, 0}});
  TimeAxis inits({1530403200});
  LeadTimeAxis leads({0});
  auto ens = EnsembleTensor::make({"dswrf", "2t"}, locs, inits, leads, 1);
  EXPECT_EQ(testing_support::error_code_of([&] {
              simulate_ensemble(ens, precompute_solar(locs, inits, leads), bundled_module_catalog(), {});
            }),
            Errc::unknown_variable);
}

TEST(Catalog, BundledModules) {
  const auto& cat = bundled_module_catalog();
  ASSERT_EQ(cat.size(), 11u);
  EXPECT_EQ(cat.front().code, "SP128");
  EXPECT_EQ(cat.back().code, "KS20");
  EXPECT_EQ(find_module(cat, "FS272").stc_rating, 72.5);
  EXPECT_EQ(find_module(cat, "SF160S").material, "CIS");
  EXPECT_EQ(testing_support::error_code_of([&] { find_module(cat, "XYZ"); }), Errc::unknown_variable);

  const auto path = testing_support::temp_path("modules.csv");
  write_module_catalog(cat, path);
  const auto again = read_module_catalog(path);
  ASSERT_EQ(again.size(), cat.size());
  for (std::size_t k = 0; k < cat.size(); ++k) {
    EXPECT_EQ(again[k].code, cat[k].code);
    EXPECT_EQ(again[k].stc_rating, cat[k].stc_rating);
    EXPECT_EQ(again[k].area, cat[k].area);
  }
}

TEST(Catalog, RejectsBadRows) {
  using testing_support::error_code_of;
  EXPECT_EQ(error_code_of([] { parse_module_catalog("code,area\nX,1\n"); }), Errc::malformed_header);
  EXPECT_EQ(error_code_of([] { parse_module_catalog("code,area,stc_rating\nX,1,0\n"); }),
            Errc::invalid_argument);
  EXPECT_EQ(error_code_of([] { parse_module_catalog("code,area,stc_rating\nX,1\n"); }),
            Errc::dimension_mismatch);
}
