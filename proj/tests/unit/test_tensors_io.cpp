#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "anensolar/error.hpp"
#include "anensolar/io.hpp"
#include "anensolar/random.hpp"
#include "anensolar/tensors.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace anensolar;
namespace fs = std::filesystem;

namespace {

using testing_support::error_code_of;
using testing_support::temp_path;

ForecastTensor sample_forecasts() {
  Rng rng(7);
  auto f = oracle::random_forecasts(rng, 2, 3, 4, 5, 0.1);
  return f;
}

}  // namespace

TEST(Array, BoundsAndMissingAwareEquality) {
  Array<2> a({2, 3}, 1.0);
  EXPECT_EQ(a.size(), 6u);
  EXPECT_THROW(a(2, 0), std::out_of_range);
  a(1, 2) = kMissing;
  Array<2> b = a;
  EXPECT_TRUE(a == b);
  b(1, 2) = 0.0;
  EXPECT_FALSE(a == b);
}

TEST(LocationSet, RejectsSparseIdsAndBadCoordinates) {
  EXPECT_EQ(error_code_of([] { LocationSet({{1, 0, 0, 0}}); }), Errc::duplicate_name);
  EXPECT_EQ(error_code_of([] { LocationSet({{0, 0, 0, 0}, {0, 1, 1, 0}}); }), Errc::duplicate_name);
  EXPECT_EQ(error_code_of([] { LocationSet({{0, 91, 0, 0}}); }), Errc::out_of_range_value);
  EXPECT_EQ(error_code_of([] { LocationSet({{0, 0, 181, 0}}); }), Errc::out_of_range_value);
}

TEST(TimeAxis, StrictlyIncreasing) {
  EXPECT_EQ(error_code_of([] { TimeAxis({0, 10, 10}); }), Errc::non_monotone_axis);
  EXPECT_EQ(error_code_of([] { LeadTimeAxis({-1, 0}); }), Errc::non_monotone_axis);
  TimeAxis t({0, 10, 20});
  EXPECT_EQ(t.find(10), 1u);
  EXPECT_FALSE(t.find(15).has_value());
}

TEST(ForecastTensor, DuplicatePredictorNames) {
  EXPECT_EQ(error_code_of([] {
              ForecastTensor::make({"a", "a"}, LocationSet({{0, 0, 0, 0}}), TimeAxis({0}),
                                   LeadTimeAxis({0}));
            }),
            Errc::duplicate_name);
}

TEST(AlignObservations, PicksValidTimes) {
  auto obs = ObservationTensor::make({"x"}, LocationSet({{0, 0, 0, 0}}), TimeAxis({0, 3600}));
  obs.values(0, 0, 0) = 1.0;
  obs.values(0, 0, 1) = 2.0;
  auto al = align_observations(obs, TimeAxis({0}), LeadTimeAxis({0, 3600}));
  EXPECT_EQ(al.values(0, 0, 0, 0), 1.0);
  EXPECT_EQ(al.values(0, 0, 0, 1), 2.0);

  auto obs1 = ObservationTensor::make({"x"}, LocationSet({{0, 0, 0, 0}}), TimeAxis({0}));
  obs1.values(0, 0, 0) = 1.0;
  auto al1 = align_observations(obs1, TimeAxis({0}), LeadTimeAxis({7200}));
  EXPECT_TRUE(is_missing(al1.values(0, 0, 0, 0)));
}

TEST(AlignObservations, MatchesPerElementLookupOnRandomInstances) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EpochSeconds> times;
    EpochSeconds t = static_cast<EpochSeconds>(rng.below(5)) * 3600;
    for (int k = 0; k < 20; ++k) {
      times.push_back(t);
      t += 3600 * static_cast<EpochSeconds>(1 + rng.below(3));
    }
    auto obs = ObservationTensor::make({"a", "b"}, LocationSet({{0, 0, 0, 0}, {1, 1, 1, 0}}),
                                       TimeAxis(times));
    for (auto& v : obs.values.data()) v = rng.uniform();
    std::vector<EpochSeconds> inits;
    EpochSeconds i0 = 0;
    for (int k = 0; k < 4; ++k) {
      inits.push_back(i0);
      i0 += 3600 * static_cast<EpochSeconds>(1 + rng.below(6));
    }
    std::vector<std::int64_t> leads{0, 3600, 7200, 10800 + 3600 * static_cast<std::int64_t>(rng.below(4))};
    auto al = align_observations(obs, TimeAxis(inits), LeadTimeAxis(leads));
    for (std::size_t v = 0; v < 2; ++v)
      for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t i = 0; i < inits.size(); ++i)
          for (std::size_t j = 0; j < leads.size(); ++j) {
            double expected = kMissing;
            for (std::size_t k = 0; k < times.size(); ++k)
              if (times[k] == inits[i] + leads[j]) expected = obs.values(v, l, k);
            const double got = al.values(v, l, i, j);
            if (is_missing(expected)) {
              EXPECT_TRUE(is_missing(got));
            } else {
              EXPECT_EQ(got, expected);
            }
          }
  }
}

TEST(SelectPredictors, ReordersAndRejectsUnknown) {
  auto f = sample_forecasts();
  auto s = select_predictors(f, {"v1", "v0"});
  EXPECT_EQ(s.predictor_names, (std::vector<std::string>{"v1", "v0"}));
  EXPECT_TRUE(s.values(0, 2, 3, 4) == f.values(1, 2, 3, 4) ||
              (is_missing(s.values(0, 2, 3, 4)) && is_missing(f.values(1, 2, 3, 4))));
  EXPECT_EQ(error_code_of([&] { select_predictors(f, {"nope"}); }), Errc::unknown_variable);
}

TEST(ContainerIo, BinaryRoundTripIsIdentical) {
  auto f = sample_forecasts();
  const auto path = temp_path("roundtrip.anen");
  write_tensor(f, path);
  auto g = read_forecasts(path);
  EXPECT_EQ(g.predictor_names, f.predictor_names);
  EXPECT_EQ(g.locations, f.locations);
  EXPECT_EQ(g.init_times, f.init_times);
  EXPECT_EQ(g.lead_times, f.lead_times);
  EXPECT_TRUE(g.values == f.values);
}

TEST(ContainerIo, CsvRoundTripIsIdentical) {
  auto f = sample_forecasts();
  const auto path = temp_path("roundtrip.csv");
  write_tensor(f, path);
  auto g = read_forecasts(path);
  EXPECT_EQ(g.predictor_names, f.predictor_names);
  EXPECT_EQ(g.locations, f.locations);
  EXPECT_TRUE(g.values == f.values);
}

TEST(ContainerIo, ObservationAndEnsembleRoundTrip) {
  auto obs = ObservationTensor::make({"x", "y"}, LocationSet({{0, 1.5, 2.5, 3.5}}),
                                     TimeAxis({0, 60, 120}));
  Rng rng(3);
  for (auto& v : obs.values.data()) v = rng.normal();
  const auto p1 = temp_path("obs.anen");
  write_tensor(obs, p1);
  auto o2 = read_observations(p1);
  EXPECT_TRUE(o2.values == obs.values);
  EXPECT_EQ(o2.valid_times, obs.valid_times);

  auto ens = EnsembleTensor::make({"p"}, LocationSet({{0, 0, 0, 0}}), TimeAxis({0, 86400}),
                                  LeadTimeAxis({0, 3600}), 3);
  for (auto& v : ens.values.data()) v = rng.uniform();
  const auto p2 = temp_path("ens.csv");
  write_tensor(ens, p2);
  auto e2 = read_ensemble(p2);
  EXPECT_TRUE(e2.values == ens.values);
}

TEST(ContainerIo, NameCountMismatchIsHeaderError) {
  const auto path = temp_path("bad_names.anen");
  {
    std::ofstream out(path, std::ios::binary);
    out << "ANENSOLAR/1\nkind forecast\nshape 3 1 1 1\nnames 3\na\nb\n";
  }
  EXPECT_EQ(error_code_of([&] { read_forecasts(path); }), Errc::malformed_header);
}

TEST(ContainerIo, NonIncreasingInitsIsAxisError) {
  auto f = sample_forecasts();
  const auto path = temp_path("bad_axis.anen");
  write_tensor(f, path);
  auto raw = read_container(path);
  for (auto& [label, values] : raw.axes) {
    if (label == "init_times") values[2] = values[1];
  }
  write_container(raw, path);
  EXPECT_EQ(error_code_of([&] { read_forecasts(path); }), Errc::non_monotone_axis);
}

TEST(ContainerIo, TruncatedPayloadIsDimensionError) {
  auto f = sample_forecasts();
  const auto path = temp_path("short.anen");
  write_tensor(f, path);
  fs::resize_file(path, fs::file_size(path) - 8);
  EXPECT_EQ(error_code_of([&] { read_forecasts(path); }), Errc::dimension_mismatch);
}

TEST(ContainerIo, MissingFileIsIoError) {
  EXPECT_EQ(error_code_of([] { read_forecasts("/nonexistent/x.anen"); }), Errc::io_failure);
}

TEST(ContainerIo, LongLocationRowsRoundTrip) {
  std::vector<Location> locs;
  for (std::size_t l = 0; l < 12; ++l) {
    locs.push_back({l, 32.0 + l / 3.0, -110.0 + l * 25.0 / 3.0, 1234.5678901234567});
  }
  auto f = ForecastTensor::make({"a"}, LocationSet(locs), TimeAxis({1514764800, 1514851200}),
                                LeadTimeAxis({0, 3600}));
  const auto path = temp_path("long_rows.anen");
  write_tensor(f, path);
  EXPECT_EQ(read_forecasts(path).locations, f.locations);
}
