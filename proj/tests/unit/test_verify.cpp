#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "anensolar/random.hpp"
#include "anensolar/verify.hpp"
#include "oracles.hpp"
#include "reference_values.hpp"
#include "test_helpers.hpp"

using namespace anensolar;
using testing_support::error_code_of;

namespace {

constexpr EpochSeconds kJun1 = 1527811200;  // 2018-06-01 00:00 UTC

std::vector<std::int64_t> hourly_leads(int n) {
  std::vector<std::int64_t> leads;
  for (int h = 0; h < n; ++h) leads.push_back(h * 3600);
  return leads;
}

}  // namespace

TEST(Crps, UnitValues) {
  const double two[] = {0.0, 2.0};
  EXPECT_EQ(crps(two, 1.0), 0.5);
  const double one[] = {3.25};
  EXPECT_EQ(crps(one, 1.0), 2.25);
  EXPECT_EQ(crps(one, 5.0), 1.75);
  const double same[] = {4.0, 4.0, 4.0};
  EXPECT_EQ(crps(same, 4.0), 0.0);
}

TEST(Crps, MatchesCdfIntegral) {
  Rng rng(10);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> xs(1 + rng.below(30));
    for (auto& x : xs) x = rng.normal() * 50.0;
    const double y = rng.normal() * 60.0;
    const double want = oracle::crps_integral(xs, y);
    EXPECT_NEAR(crps(xs, y), want, 1e-9 * std::max(1.0, want));
  }
}

TEST(Metrics, RmseBiasSpread) {
  const double p[] = {1.0, 2.0, 3.0, kMissing};
  const double t[] = {2.0, 2.0, 5.0, 1.0};
  EXPECT_DOUBLE_EQ(rmse(p, t), std::sqrt(5.0 / 3.0));
  EXPECT_DOUBLE_EQ(bias(p, t), -1.0);
  const double m[] = {1.0, 3.0};
  EXPECT_EQ(ensemble_spread(m), 1.0);
}

TEST(Wilcoxon, ExactDistributionMatchesScipy) {
  const auto r = paired_significance(refvals::kWilcoxonExactA, refvals::kWilcoxonExactB);
  EXPECT_NEAR(r.p_value, refvals::kWilcoxonExactP, 1e-12);
  EXPECT_EQ(r.statistic, refvals::kWilcoxonExactWPlus);
  EXPECT_EQ(r.nonzero, 10u);
  EXPECT_FALSE(r.significant);
}

TEST(Wilcoxon, TiedNormalApproximationMatchesScipy) {
  const auto r = paired_significance(refvals::kWilcoxonTiedA, refvals::kWilcoxonTiedB);
  EXPECT_NEAR(r.p_value, refvals::kWilcoxonTiedP, 1e-9);
  EXPECT_TRUE(r.significant);
}

TEST(Wilcoxon, FalsePositiveRateNearLevel) {
  Rng rng(99);
  int rejections = 0;
  const int trials = 2000;
  for (int k = 0; k < trials; ++k) {
    std::vector<double> a(30), b(30);
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    if (paired_significance(a, b, 0.05).significant) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / trials;
  EXPECT_GT(rate, 0.03);
  EXPECT_LT(rate, 0.07);
}

TEST(Wilcoxon, DetectsClearImprovementAndRejectsSmallSamples) {
  Rng rng(1);
  std::vector<double> a(40), b(40);
  for (std::size_t i = 0; i < 40; ++i) {
    a[i] = 2.0 + rng.normal() * 0.3;
    b[i] = 1.0 + rng.normal() * 0.3;
  }
  EXPECT_TRUE(paired_significance(a, b).significant);
  const double few[] = {1, 2, 3};
  EXPECT_EQ(error_code_of([&] { paired_significance(few, few); }), Errc::invalid_argument);
}

TEST(SolarNoon, LongitudeZeroNoonIsSlot12) {
  LocationSet locs({{0, 0.0, 0.0, 0}, {1, 40.0, 0.0, 0}, {2, 40.0, -75.0, 0}, {3, 35.0, 135.0, 0}});
  std::vector<EpochSeconds> inits;
  for (int d = 0; d < 5; ++d) inits.push_back(kJun1 + d * 86400);
  const auto cache = precompute_solar(locs, TimeAxis(inits), LeadTimeAxis(hourly_leads(24)));
  const auto a = align_solar_noon(cache);
  EXPECT_EQ(a.offset[0], 0);
  EXPECT_EQ(a.offset[1], 0);
  EXPECT_EQ(a.slot(0, 12), 12u);
  EXPECT_EQ(a.offset[2], 5);
  EXPECT_EQ(a.slot(2, 17), 12u);
  EXPECT_EQ(a.offset[3], -9);
  EXPECT_EQ(a.slot(3, 3), 12u);
  EXPECT_FALSE(a.slot(3, 22).has_value());
  EXPECT_FALSE(a.slot(2, 2).has_value());
}

TEST(Grouping, LabelsAndParsing) {
  EXPECT_EQ(season_of(1514764800), "DJF");
  EXPECT_EQ(season_of(kJun1), "JJA");
  EXPECT_EQ(season_of(1522540800), "MAM");  // 2018-04-01
  EXPECT_EQ(season_of(1538352000), "SON");  // 2018-10-01
  EXPECT_EQ(daypart_of(8), "morning");
  EXPECT_EQ(daypart_of(12), "noon");
  EXPECT_EQ(daypart_of(16), "afternoon");
  EXPECT_FALSE(daypart_of(7).has_value());
  EXPECT_FALSE(daypart_of(17).has_value());
  EXPECT_EQ(parse_grouping("lead"), Grouping::lead);
  EXPECT_EQ(to_string(Grouping::season), "season");
  EXPECT_EQ(error_code_of([] { parse_grouping("week"); }), Errc::invalid_argument);
}

TEST(Aggregate, MatchesDirectComputation) {
  LocationSet locs({{0, 35.0, -100.0, 0}, {1, 40.0, -90.0, 0}});
  TimeAxis inits({kJun1, kJun1 + 86400, kJun1 + 2 * 86400});
  LeadTimeAxis leads(hourly_leads(24));
  const auto cache = precompute_solar(locs, inits, leads);
  auto fc = EnsembleTensor::make({"p"}, locs, inits, leads, 4);
  // truth carries an extra earlier init, matched by time
  TimeAxis truth_inits({kJun1 - 86400, kJun1, kJun1 + 86400, kJun1 + 2 * 86400});
  auto truth = EnsembleTensor::make({"p"}, locs, truth_inits, leads, 1);
  Rng rng(6);
  for (auto& v : fc.values.data()) v = rng.uniform() * 100.0;
  for (auto& v : truth.values.data()) v = rng.uniform() * 100.0;
  fc.values(0, 0, 0, 18, 2) = kMissing;
  truth.values(0, 1, 2, 19, 0) = kMissing;

  VerifyInputs in{&fc, &truth, "p", "", &cache};
  const auto all = aggregate(in, Grouping::all);
  ASSERT_EQ(all.rows.size(), 1u);
  double sq = 0, err = 0, cr = 0, sp = 0;
  std::size_t n = 0;
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 24; ++j) {
        if (cache.at(l, i, j).position.apparent_zenith >= 90.0) continue;
        const double y = truth.values(0, l, i + 1, j, 0);
        if (is_missing(y)) continue;
        std::vector<double> xs;
        for (std::size_t m = 0; m < 4; ++m)
          if (!is_missing(fc.values(0, l, i, j, m))) xs.push_back(fc.values(0, l, i, j, m));
        double mean = 0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        sq += (mean - y) * (mean - y);
        err += mean - y;
        cr += oracle::crps_integral(xs, y);
        sp += oracle::population_sd(xs);
        ++n;
      }
  EXPECT_EQ(all.rows[0].count, n);
  EXPECT_NEAR(all.rows[0].rmse, std::sqrt(sq / static_cast<double>(n)), 1e-9);
  EXPECT_NEAR(all.rows[0].bias, err / static_cast<double>(n), 1e-9);
  EXPECT_NEAR(all.rows[0].crps, cr / static_cast<double>(n), 1e-9);
  EXPECT_NEAR(all.rows[0].spread, sp / static_cast<double>(n), 1e-9);

  for (auto g : {Grouping::lead, Grouping::location, Grouping::season}) {
    std::size_t total = 0;
    for (const auto& r : aggregate(in, g).rows) total += r.count;
    EXPECT_EQ(total, n);
  }
  const auto by_loc = aggregate(in, Grouping::location);
  ASSERT_EQ(by_loc.rows.size(), 2u);
  EXPECT_EQ(by_loc.rows[0].group, "0");

  RegionMap regions{{1, "Zone 4"}};
  const auto by_region = aggregate(in, Grouping::region, &regions);
  ASSERT_EQ(by_region.rows.size(), 1u);
  EXPECT_EQ(by_region.rows[0].group, "Zone 4");
  EXPECT_EQ(by_region.rows[0].count, by_loc.rows[1].count);

  const auto alignment = align_solar_noon(cache);
  const auto parts = aggregate(in, Grouping::daypart, nullptr, &alignment);
  ASSERT_EQ(parts.rows.size(), 3u);
  EXPECT_EQ(parts.rows[0].group, "morning");
  EXPECT_EQ(parts.rows[2].group, "afternoon");
  EXPECT_EQ(error_code_of([&] { aggregate(in, Grouping::daypart); }), Errc::invalid_argument);

  const auto path = testing_support::temp_path("report.csv");
  write_report_csv(all, path);
  const auto back = read_report_csv(path);
  ASSERT_EQ(back.rows.size(), 1u);
  EXPECT_EQ(back.rows[0].rmse, all.rows[0].rmse);
  EXPECT_EQ(back.rows[0].count, n);
}

TEST(Aggregate, PerfectForecastScoresZero) {
  LocationSet locs({{0, 35.0, -100.0, 0}});
  TimeAxis inits({kJun1});
  LeadTimeAxis leads(hourly_leads(24));
  const auto cache = precompute_solar(locs, inits, leads);
  auto fc = EnsembleTensor::make({"p"}, locs, inits, leads, 3);
  auto truth = EnsembleTensor::make({"p"}, locs, inits, leads, 1);
  for (std::size_t j = 0; j < 24; ++j) {
    truth.values(0, 0, 0, j, 0) = static_cast<double>(j);
    for (std::size_t m = 0; m < 3; ++m) fc.values(0, 0, 0, j, m) = static_cast<double>(j);
  }
  const auto r = aggregate({&fc, &truth, "p", "", &cache}, Grouping::all);
  EXPECT_EQ(r.rows[0].rmse, 0.0);
  EXPECT_EQ(r.rows[0].crps, 0.0);
  EXPECT_EQ(r.rows[0].spread, 0.0);
}

TEST(RegionMap, ReadsCsv) {
  const auto path = testing_support::temp_path("regions.csv");
  {
    std::ofstream out(path);
    out << "location,region\n0,Zone 2\n3,Zone 5\n";
  }
  const auto m = read_region_map(path);
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.at(3), "Zone 5");
}
