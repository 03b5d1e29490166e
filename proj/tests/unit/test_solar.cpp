#include <gtest/gtest.h>

#include <cmath>

#include "anensolar/random.hpp"
#include "anensolar/solar.hpp"
#include "reference_values.hpp"
#include "test_helpers.hpp"

using namespace anensolar;

namespace {

double angle_diff(double a, double b) {
  double d = std::fmod(std::abs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

// 2019-03-20 (equinox day) and 2019-06-21, 00:00 UTC
constexpr EpochSeconds kEquinoxDay = 1553040000;
constexpr EpochSeconds kSolsticeDay = 1561075200;

}  // namespace

TEST(SolarPosition, AlmanacSpotChecks) {
  for (const auto& s : refvals::kSolarSpots) {
    const auto p = solar_position(s.time, s.latitude, s.longitude);
    EXPECT_NEAR(p.apparent_zenith, s.apparent_zenith, 0.5) << s.label;
    EXPECT_LT(angle_diff(p.azimuth, s.azimuth), 0.5) << s.label;
  }
}

TEST(SolarPosition, StateCollegeExample) {
  const auto& s = refvals::kStateCollege;
  const auto p = solar_position(s.time, s.latitude, s.longitude);
  EXPECT_NEAR(p.apparent_zenith, s.apparent_zenith, 0.5);
  EXPECT_LT(angle_diff(p.azimuth, s.azimuth), 0.5);
}

TEST(SolarPosition, EquinoxEquatorNoon) {
  // local solar noon at longitude 0 is 12:00 UTC minus the equation of time
  const auto probe = solar_position(kEquinoxDay + 12 * 3600, 0.0, 0.0);
  const auto noon = kEquinoxDay + 12 * 3600 - static_cast<EpochSeconds>(std::lround(probe.equation_of_time * 60));
  EXPECT_LT(solar_position(noon, 0.0, 0.0).apparent_zenith, 1.5);
}

TEST(SolarPosition, HemisphericSymmetryAtNoon) {
  for (EpochSeconds day : {kEquinoxDay, kSolsticeDay, kSolsticeDay + 90 * 86400}) {
    const auto probe = solar_position(day + 12 * 3600, 0.0, 0.0);
    const auto noon = day + 12 * 3600 - static_cast<EpochSeconds>(std::lround(probe.equation_of_time * 60));
    const auto north = solar_position(noon, 40.0, 0.0);
    const auto south = solar_position(noon, -40.0, 0.0);
    EXPECT_NEAR(south.apparent_zenith - north.apparent_zenith, 2.0 * north.declination, 0.5);
  }
}

TEST(SolarPosition, RangesHoldEverywhere) {
  Rng rng(1);
  for (int k = 0; k < 2000; ++k) {
    const EpochSeconds t = 946684800 + static_cast<EpochSeconds>(rng.below(50ull * 365 * 86400));
    const auto p = solar_position(t, rng.uniform() * 180 - 90, rng.uniform() * 360 - 180);
    EXPECT_GE(p.apparent_zenith, 0.0);
    EXPECT_LE(p.apparent_zenith, 180.0);
    EXPECT_GE(p.azimuth, 0.0);
    EXPECT_LT(p.azimuth, 360.0);
  }
}

TEST(Extraterrestrial, CorrectionForms) {
  // early January and early July bands
  const EpochSeconds jan3 = 1514937600, jul4 = 1530662400;
  for (auto form : {EarthSunCorrection::spencer, EarthSunCorrection::simple_cosine}) {
    const double jan = extraterrestrial_normal(jan3, form) / kSolarConstant;
    const double jul = extraterrestrial_normal(jul4, form) / kSolarConstant;
    EXPECT_GE(jan, 1.025);
    EXPECT_LE(jan, 1.040);
    EXPECT_GE(jul, 0.965);
    EXPECT_LE(jul, 0.975);
  }
  // 1 + 0.033 cos(2 pi doy / 365) equals 1 at doy = 365 / 4
  const EpochSeconds jan1_2018 = 1514764800;
  const EpochSeconds unit_day = jan1_2018 + static_cast<EpochSeconds>((365.0 / 4.0 - 1.0) * 86400.0);
  EXPECT_NEAR(extraterrestrial_normal(unit_day, EarthSunCorrection::simple_cosine), kSolarConstant,
              1e-6 * kSolarConstant);
}

TEST(Extraterrestrial, AnnualMeanAndRange) {
  for (auto form : {EarthSunCorrection::spencer, EarthSunCorrection::simple_cosine}) {
    double sum = 0;
    const EpochSeconds jan1 = 1514764800;
    for (int d = 0; d < 365; ++d) {
      const double e = extraterrestrial_normal(jan1 + d * 86400 + 43200, form);
      EXPECT_GE(e, 1300.0);
      EXPECT_LE(e, 1430.0);
      sum += e;
    }
    EXPECT_NEAR(sum / 365.0 / kSolarConstant, 1.0, 1e-3);
  }
}

TEST(Airmass, KastenYoung) {
  EXPECT_NEAR(relative_airmass(0.0), 1.0, 1e-3);
  const double z60 = relative_airmass(60.0);
  EXPECT_GE(z60, 1.99);
  EXPECT_LE(z60, 2.00);
  EXPECT_TRUE(is_missing(relative_airmass(95.0)));
  double prev = 0;
  for (double z = 0; z < 90.0; z += 0.25) {
    const double am = relative_airmass(z);
    EXPECT_GT(am, prev);
    EXPECT_GE(am, 1.0 - 1e-3);
    prev = am;
  }
}

TEST(SolarCache, MatchesDirectRecomputation) {
  LocationSet locs({{0, 35.0, -100.0, 0}, {1, 45.0, -80.0, 200}, {2, -10.0, 20.0, 50}});
  TimeAxis inits({kEquinoxDay, kEquinoxDay + 86400, kSolsticeDay});
  LeadTimeAxis leads({0, 3 * 3600, 6 * 3600, 12 * 3600, 18 * 3600, 30 * 3600});
  auto table = precompute_solar(locs, inits, leads);
  EXPECT_EQ(table.size(), 3u * 3u * 6u);
  EXPECT_TRUE(table.covers(locs, inits, leads));
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const std::size_t l = rng.below(3), i = rng.below(3), j = rng.below(6);
    const auto t = inits[i] + leads[j];
    const auto& cell = table.at(l, i, j);
    const auto direct = solar_position(t, locs[l].latitude, locs[l].longitude);
    EXPECT_EQ(cell.position.apparent_zenith, direct.apparent_zenith);
    EXPECT_EQ(cell.position.azimuth, direct.azimuth);
    EXPECT_EQ(cell.e0n, extraterrestrial_normal(t));
    if (direct.apparent_zenith < 90.0) {
      EXPECT_EQ(cell.airmass, relative_airmass(direct.apparent_zenith));
    } else {
      EXPECT_TRUE(is_missing(cell.airmass));
    }
  }
  EXPECT_TRUE(precompute_solar(locs, inits, leads, EarthSunCorrection::spencer, 2) == table);
}

TEST(SolarCache, RoundTrip) {
  LocationSet locs({{0, 35.0, -100.0, 0}});
  auto table = precompute_solar(locs, TimeAxis({kEquinoxDay}), LeadTimeAxis({0, 3600, 7200}));
  const auto path = testing_support::temp_path("solar.anen");
  write_solar_cache(table, path);
  EXPECT_TRUE(read_solar_cache(path) == table);
}

TEST(SolarCache, MinimumZenithLeadIsNearSolarNoon) {
  std::vector<std::int64_t> leads;
  for (int h = 0; h < 24; ++h) leads.push_back(h * 3600);
  for (double lon : {-120.0, -75.0, 0.0, 45.0, 150.0}) {
    LocationSet locs({{0, 30.0, lon, 0}});
    auto table = precompute_solar(locs, TimeAxis({kSolsticeDay}), LeadTimeAxis(leads));
    std::size_t best = 0;
    for (std::size_t j = 1; j < 24; ++j)
      if (table.at(0, 0, j).position.apparent_zenith < table.at(0, 0, best).position.apparent_zenith) best = j;
    const double eot_h = table.at(0, 0, 12).position.equation_of_time / 60.0;
    const double noon_utc = std::fmod(12.0 - lon / 15.0 - eot_h + 48.0, 24.0);
    double diff = std::abs(static_cast<double>(best) - noon_utc);
    diff = std::min(diff, 24.0 - diff);
    EXPECT_LE(diff, 1.0) << lon;
  }
}
