#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "frugal/rng.hpp"
#include "frugal/stats.hpp"
#include "oracles.hpp"

using namespace frugal;

using namespace oracles;

TEST(Cliffs, Examples) {
  std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  EXPECT_EQ(cliffs_delta(a, a), 0);
  EXPECT_FALSE(different(cliffs_delta(a, a)));
  EXPECT_EQ(cliffs_delta(a, b), -1);
  EXPECT_TRUE(different(cliffs_delta(a, b)));
  std::vector<double> c{1, 1, 2}, d{1, 2, 2};
  // #(x>y) = 1 (2>1), #(x<y) = 4 (each 1 in c below each 2 in d)
  EXPECT_NEAR(cliffs_delta(c, d), -3.0 / 9, 1e-15);
  EXPECT_TRUE(different(cliffs_delta(c, d)));
  EXPECT_THROW(cliffs_delta({}, a), std::invalid_argument);
}

TEST(Cliffs, MatchesBruteForceAndIsAntisymmetric) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(1 + rng.below(15)), b(1 + rng.below(15));
    for (auto& x : a) x = static_cast<double>(rng.below(6));
    for (auto& x : b) x = static_cast<double>(rng.below(6));
    EXPECT_DOUBLE_EQ(cliffs_delta(a, b), brute_cliffs(a, b));
    EXPECT_DOUBLE_EQ(cliffs_delta(a, b), -cliffs_delta(b, a));
  }
}

TEST(Percentiles, NearestRank) {
  std::vector<double> v(20);
  std::iota(v.begin(), v.end(), 1.0);
  Percentiles p = percentiles(v);
  EXPECT_EQ(p.p50, 10);
  EXPECT_EQ(p.p25, 5);
  EXPECT_EQ(p.p75, 15);
  std::vector<double> one{0.3};
  p = percentiles(one);
  EXPECT_EQ(p.p25, 0.3);
  EXPECT_EQ(p.p50, 0.3);
  EXPECT_EQ(p.p75, 0.3);
  std::vector<double> unsorted{5, 1, 4, 2, 3};
  EXPECT_EQ(percentiles(unsorted).p50, 3);
}

TEST(ScottKnott, TwoClearlyDifferentTreatments) {
  auto r = scott_knott({{"hi", 1, std::vector<double>(20, 0.9)}, {"lo", 1, std::vector<double>(20, 0.1)}});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].treatment.name, "lo");
  EXPECT_EQ(r[0].rank, 0u);
  EXPECT_EQ(r[1].rank, 1u);
}

TEST(ScottKnott, IdenticalTreatmentsShareRank) {
  std::vector<double> v{0.1, 0.2, 0.3, 0.4};
  auto r = scott_knott({{"a", 1, v}, {"b", 2, v}});
  EXPECT_EQ(r[0].rank, 0u);
  EXPECT_EQ(r[1].rank, 0u);
}

TEST(ScottKnott, SingleTreatment) {
  auto r = scott_knott({{"only", 3, {0.5, 0.2}}});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].rank, 0u);
  EXPECT_THROW(scott_knott({}), std::invalid_argument);
  EXPECT_THROW(scott_knott({{"empty", 1, {}}}), std::invalid_argument);
}

TEST(ScottKnott, MedianBreaksMeanTies) {
  auto r = scott_knott({{"a", 1, {0.0, 0.75, 0.75}}, {"b", 1, {0.5, 0.5, 0.5}}});  // both means exactly 0.5
  EXPECT_EQ(r[0].treatment.name, "b");
}

// Top-level split equals exhaustive search; ranks are contiguous; each rank
// group re-ranks as one.
TEST(ScottKnott, OracleEquivalenceOnRandomSets) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Treatment> ts = random_treatments(rng);
    std::vector<RankedTreatment> ranked = scott_knott(ts);
    ASSERT_EQ(ranked.size(), ts.size());

    std::vector<Treatment> sorted;
    for (const auto& r : ranked) sorted.push_back(r.treatment);
    for (std::size_t i = 1; i < ranked.size(); ++i)
      ASSERT_TRUE(ranked[i - 1].mean < ranked[i].mean ||
                  (ranked[i - 1].mean == ranked[i].mean && ranked[i - 1].median <= ranked[i].median));
    if (sorted.size() >= 2) {
      ASSERT_EQ(*best_split(sorted), brute_split(sorted)) << trial;
    }

    ASSERT_EQ(ranked.front().rank, 0u);
    for (std::size_t i = 1; i < ranked.size(); ++i) {
      ASSERT_LE(ranked[i].rank, ranked[i - 1].rank + 1);
      ASSERT_GE(ranked[i].rank, ranked[i - 1].rank);
    }

    std::size_t start = 0;
    for (std::size_t i = 1; i <= ranked.size(); ++i) {
      if (i < ranked.size() && ranked[i].rank == ranked[start].rank) continue;
      std::vector<Treatment> group;
      for (std::size_t j = start; j < i; ++j) group.push_back(ranked[j].treatment);
      for (const auto& g : scott_knott(group)) ASSERT_EQ(g.rank, 0u) << trial;
      start = i;
    }
  }
}

TEST(ScottKnott, AcceptedSplitsAreNonSmall) {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto ranked = scott_knott(random_treatments(rng));
    EXPECT_GE(smallest_accepted_effect(ranked), kSmallEffect) << trial;
  }
}
