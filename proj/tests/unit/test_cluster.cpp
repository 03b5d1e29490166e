#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "anensolar/cluster.hpp"
#include "anensolar/random.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace anensolar;

namespace {

std::vector<std::vector<double>> random_points(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  for (auto& p : pts)
    for (auto& x : p) x = rng.normal();
  return pts;
}

Array<2> to_array(const std::vector<std::vector<double>>& pts) {
  Array<2> a({pts.size(), pts.empty() ? 0 : pts[0].size()});
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t k = 0; k < pts[i].size(); ++k) a(i, k) = pts[i][k];
  return a;
}

}  // namespace

TEST(AverageLinkage, MatchesNaiveOracle) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(9), d = 1 + rng.below(4);
    const auto pts = random_points(rng, n, d);
    const auto got = average_linkage(to_array(pts));
    const auto want = oracle::naive_average_linkage(pts);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t s = 0; s < got.size(); ++s) {
      EXPECT_EQ(got[s].first, want[s].first) << "trial " << trial << " step " << s;
      EXPECT_EQ(got[s].second, want[s].second) << "trial " << trial << " step " << s;
      EXPECT_NEAR(got[s].height, want[s].height, 1e-12 * std::max(1.0, want[s].height));
    }
  }
}

TEST(AverageLinkage, HandComputedExample) {
  // points on a line: 0, 1, 5, 6, 20
  Array<2> a({5, 1});
  const double xs[] = {0, 1, 5, 6, 20};
  for (std::size_t i = 0; i < 5; ++i) a(i, 0) = xs[i];
  const auto m = average_linkage(a);
  ASSERT_EQ(m.size(), 4u);
  EXPECT_EQ(m[0], (Merge{0, 1, 1.0, 2}));
  EXPECT_EQ(m[1], (Merge{2, 3, 1.0, 2}));
  EXPECT_EQ(m[2].first, 0u);
  EXPECT_EQ(m[2].second, 2u);
  EXPECT_DOUBLE_EQ(m[2].height, 5.0);  // (5+6+4+5)/4
  EXPECT_EQ(m[3].size, 5u);
  EXPECT_DOUBLE_EQ(m[3].height, (20 + 19 + 15 + 14) / 4.0);
}

TEST(CutTree, LabelsFollowSmallestMember) {
  Array<2> a({5, 1});
  const double xs[] = {20, 0, 5, 1, 6};
  for (std::size_t i = 0; i < 5; ++i) a(i, 0) = xs[i];
  const auto m = average_linkage(a);
  EXPECT_EQ(cut_tree(m, 5, 5), (std::vector<int>{1, 2, 3, 4, 5}));
  EXPECT_EQ(cut_tree(m, 5, 3), (std::vector<int>{1, 2, 3, 2, 3}));
  EXPECT_EQ(cut_tree(m, 5, 2), (std::vector<int>{1, 2, 2, 2, 2}));
  EXPECT_EQ(cut_tree(m, 5, 1), (std::vector<int>{1, 1, 1, 1, 1}));
}

TEST(CutTree, ProducesExactlyKClusters) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    const auto m = average_linkage(to_array(random_points(rng, n, 3)));
    for (std::size_t k = 1; k <= n; ++k) {
      const auto labels = cut_tree(m, n, k);
      std::set<int> distinct(labels.begin(), labels.end());
      EXPECT_EQ(distinct.size(), k);
      EXPECT_EQ(*distinct.begin(), 1);
      EXPECT_EQ(*distinct.rbegin(), static_cast<int>(k));
    }
  }
}

TEST(Zscore, DropsConstantColumns) {
  Array<2> f({4, 3});
  for (std::size_t i = 0; i < 4; ++i) {
    f(i, 0) = static_cast<double>(i);
    f(i, 1) = 7.0;
    f(i, 2) = 10.0 * static_cast<double>(i * i);
  }
  const auto [z, kept] = zscore_columns(f);
  EXPECT_EQ(kept, (std::vector<std::size_t>{0, 2}));
  ASSERT_EQ(z.extent(1), 2u);
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0, ss = 0;
    for (std::size_t i = 0; i < 4; ++i) mean += z(i, c);
    mean /= 4;
    for (std::size_t i = 0; i < 4; ++i) ss += (z(i, c) - mean) * (z(i, c) - mean);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(ss / 4, 1.0, 1e-12);
  }
}

TEST(HierarchicalCluster, SeparatesObviousGroups) {
  Rng rng(12);
  Array<2> f({30, 2});
  for (std::size_t i = 0; i < 30; ++i) {
    const double cx = static_cast<double>(i % 3) * 10.0;
    f(i, 0) = cx + rng.normal() * 0.3;
    f(i, 1) = -cx + rng.normal() * 0.3;
  }
  const auto rc = hierarchical_cluster(f, 3);
  EXPECT_EQ(rc.regimes(), 3u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(rc.labels[i], static_cast<int>(i % 3) + 1);
  const auto groups = rc.members();
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups[0].size(), 10u);
  EXPECT_EQ(testing_support::error_code_of([&] { hierarchical_cluster(f, 31); }),
            Errc::invalid_argument);
}

TEST(Labels, CsvRoundTrip) {
  const std::vector<int> labels{1, 2, 2, 3, 1};
  const auto path = testing_support::temp_path("labels.csv");
  write_labels_csv(labels, path);
  EXPECT_EQ(read_labels_csv(path), labels);
}
