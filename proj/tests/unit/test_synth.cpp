#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "anensolar/solar.hpp"
#include "anensolar/synth.hpp"
#include "test_helpers.hpp"

using namespace anensolar;
using testing_support::error_code_of;

namespace {

double hill(double lat, double lon) { return 100.0 * std::abs(lat - 35.0) + 10.0 * std::abs(lon + 100.0); }

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.locations = grid_locations(2, 3, 30.0, 40.0, -110.0, -90.0, hill);
  cfg.days = 6;
  cfg.errors["dswrf"] = {-0.2, 0.1};
  cfg.errors["2t"] = {0.0, 1.5};
  return cfg;
}

std::size_t var(const SynthOutput& s, const std::string& name) {
  return *s.analysis.variable_index(name);
}

}  // namespace

TEST(Synth, DeterministicAndParallelInvariant) {
  auto cfg = small_config();
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  EXPECT_TRUE(a.analysis.values == b.analysis.values);
  EXPECT_TRUE(a.forecasts.values == b.forecasts.values);
  cfg.parallel = 3;
  const auto c = generate(cfg);
  EXPECT_TRUE(a.forecasts.values == c.forecasts.values);
  cfg.seed = 43;
  const auto d = generate(cfg);
  EXPECT_FALSE(a.analysis.values == d.analysis.values);
}

TEST(Synth, ShapesAndAxes) {
  const auto s = generate(small_config());
  EXPECT_EQ(s.analysis.variable_names, synth_variables());
  EXPECT_EQ(s.forecasts.locations.size(), 6u);
  EXPECT_EQ(s.forecasts.init_times.size(), 6u);
  EXPECT_EQ(s.forecasts.lead_times.size(), 24u);
  EXPECT_EQ(s.forecasts.init_times[1] - s.forecasts.init_times[0], 86400);
  EXPECT_EQ(s.analysis.valid_times.size(), 5u * 24u + 24u);
}

TEST(Synth, NightIrradianceIsZeroAndRangesHold) {
  const auto s = generate(small_config());
  const auto ghi = var(s, "dswrf"), tcc = var(s, "tcc"), al = var(s, "al"), t2 = var(s, "2t");
  std::size_t day_cells = 0;
  for (std::size_t l = 0; l < 6; ++l) {
    const auto& loc = s.analysis.locations[l];
    for (std::size_t h = 0; h < s.analysis.valid_times.size(); ++h) {
      const auto t = s.analysis.valid_times[h];
      const double z = solar_position(t, loc.latitude, loc.longitude).apparent_zenith;
      const double g = s.analysis.values(ghi, l, h);
      if (z >= 90.0) {
        EXPECT_EQ(g, 0.0);
      } else {
        ++day_cells;
        EXPECT_GE(g, 0.0);
        EXPECT_LE(g, 0.75 * extraterrestrial_normal(t) * std::cos(z * std::numbers::pi / 180.0) + 1e-9);
      }
      EXPECT_GE(s.analysis.values(tcc, l, h), 0.0);
      EXPECT_LE(s.analysis.values(tcc, l, h), 100.0);
      EXPECT_GE(s.analysis.values(al, l, h), 0.0);
      EXPECT_LE(s.analysis.values(al, l, h), 100.0);
      EXPECT_GT(s.analysis.values(t2, l, h), 220.0);
      EXPECT_LT(s.analysis.values(t2, l, h), 340.0);
    }
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 24; ++j) {
        const auto t = s.forecasts.init_times[i] + s.forecasts.lead_times[j];
        const double fz = solar_position(t, loc.latitude, loc.longitude).apparent_zenith;
        const double fg = s.forecasts.values(ghi, l, i, j);
        if (fz >= 90.0) EXPECT_EQ(fg, 0.0);
        EXPECT_GE(fg, 0.0);
      }
  }
  EXPECT_GT(day_cells, 0u);
}

TEST(Synth, ErrorFreeForecastsEqualAnalysis) {
  auto cfg = small_config();
  cfg.errors.clear();
  const auto s = generate(cfg);
  for (std::size_t v = 0; v < synth_variables().size(); ++v)
    for (std::size_t l = 0; l < 6; ++l)
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 24; ++j) {
          const auto h = *s.analysis.valid_times.find(s.forecasts.init_times[i] + s.forecasts.lead_times[j]);
          EXPECT_EQ(s.forecasts.values(v, l, i, j), s.analysis.values(v, l, h));
        }
}

TEST(Synth, RegimeBiasShowsUpWhereCloudy) {
  auto cfg = small_config();
  cfg.errors.clear();
  cfg.days = 20;
  cfg.regimes = {SynthRegime{}, SynthRegime{0.0, {{"dswrf", {-0.5, 0.0}}}}};
  cfg.regime_of_location = {0, 0, 0, 1, 1, 1};
  const auto s = generate(cfg);
  const auto ghi = var(s, "dswrf");
  double diff[2] = {0, 0};
  for (std::size_t l = 0; l < 6; ++l)
    for (std::size_t i = 0; i < cfg.days; ++i)
      for (std::size_t j = 0; j < 24; ++j) {
        const auto h = *s.analysis.valid_times.find(s.forecasts.init_times[i] + s.forecasts.lead_times[j]);
        diff[l / 3] += s.forecasts.values(ghi, l, i, j) - s.analysis.values(ghi, l, h);
      }
  EXPECT_EQ(diff[0], 0.0);
  EXPECT_LT(diff[1], 0.0);
}

TEST(Synth, ValidationListsEveryProblem) {
  SynthConfig cfg;
  cfg.start = 1514764800 + 3600;
  cfg.ar_phi = 1.5;
  cfg.errors["nope"] = {0.0, -1.0};
  try {
    cfg.validate();
    FAIL() << "expected validation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_argument);
    const std::string msg = e.what();
    for (const char* field : {"locations", "start", "ar_phi", "errors: unknown variable 'nope'", "errors.nope.noise"})
      EXPECT_NE(msg.find(field), std::string::npos) << field;
  }
}
