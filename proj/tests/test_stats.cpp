#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <tuple>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eventimpact/mathutil.hpp"
#include "eventimpact/stats.hpp"

using namespace eventimpact;

namespace {

GroupedSample two_groups(std::vector<double> a, std::vector<double> b) {
  return GroupedSample{{"g1", "g2"}, {std::move(a), std::move(b)}};
}

double pooled_t_pvalue(const std::vector<double>& a,
                       const std::vector<double>& b) {
  double na = double(a.size()), nb = double(b.size());
  double ma = mean(a), mb = mean(b);
  double ssw = 0.0;
  for (double v : a) ssw += (v - ma) * (v - ma);
  for (double v : b) ssw += (v - mb) * (v - mb);
  double df = na + nb - 2.0;
  double sp2 = ssw / df;
  double t = std::abs(mb - ma) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

}  // namespace

// ---------------------------------------------------------------------------
// input validation

TEST(GroupedSampleTest, ValidateRejectsIllFormedInput) {
  EXPECT_THROW(GroupedSample({{"only"}, {{1.0, 2.0}}}).validate(), DataError);
  EXPECT_THROW(GroupedSample({{"a", "b", "c"}, {{1.0, 2.0}, {3.0, 4.0}}})
                   .validate(),
               DataError);
  try {
    GroupedSample({{"a", "tiny"}, {{1.0, 2.0}, {3.0}}}).validate();
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("tiny"), std::string::npos);
  }
  GroupedSample nan_sample =
      two_groups({1.0, std::numeric_limits<double>::quiet_NaN()}, {3.0, 4.0});
  EXPECT_THROW(nan_sample.validate(), DataError);
  EXPECT_NO_THROW(two_groups({1.0, 2.0}, {3.0, 4.0}).validate());
}

// ---------------------------------------------------------------------------
// Levene (center = mean)

TEST(LeveneTest, EqualSpreadsWithNoDeviationScatterGiveZeroF) {
  // every |v - group mean| equals 0.5, so both sums of squares vanish
  auto r = levene_mean(two_groups({1.0, 2.0}, {10.0, 11.0}));
  EXPECT_DOUBLE_EQ(r.F, 0.0);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
  EXPECT_EQ(r.df_between, 1);
  EXPECT_EQ(r.df_within, 2);
}

TEST(LeveneTest, MatchesHandComputedAnovaOnDeviations) {
  // deviations: {1,0,1} about mean 2 and {10,0,10} about mean 20
  // ssb = 54, ssw = 202/3, F = 54 / ((202/3)/4) = 324/101
  auto r = levene_mean(two_groups({1.0, 2.0, 3.0}, {10.0, 20.0, 30.0}));
  EXPECT_EQ(r.df_between, 1);
  EXPECT_EQ(r.df_within, 4);
  EXPECT_NEAR(r.F, 324.0 / 101.0, 1e-12);
  // F(1, df) is t(df)^2, so the p-value has an independent expression
  boost::math::students_t t4(4.0);
  double expected_p =
      2.0 * boost::math::cdf(boost::math::complement(t4, std::sqrt(r.F)));
  EXPECT_NEAR(r.p, expected_p, 1e-12);
}

TEST(LeveneTest, ZeroWithinScatterWithSeparatedGroupsIsDegenerate) {
  // deviations are {1,1} and {2,2,2,2}: ssw = 0 but ssb > 0
  EXPECT_THROW(levene_mean(two_groups({1.0, 3.0}, {1.0, 1.0, 5.0, 5.0})),
               DataError);
}

TEST(LeveneTest, InvariantToGroupShiftsAndCommonScaling) {
  GroupedSample base = two_groups({1.25, 2.5, 3.0, 4.25},
                                  {0.5, 1.75, 5.0, 6.75});
  auto r0 = levene_mean(base);
  GroupedSample moved = base;
  for (double& v : moved.groups[0]) v += 512.0;  // per-group location shift
  for (double& v : moved.groups[1]) v -= 128.0;
  auto r1 = levene_mean(moved);
  EXPECT_DOUBLE_EQ(r1.F, r0.F);
  EXPECT_DOUBLE_EQ(r1.p, r0.p);
  GroupedSample scaled = base;
  for (auto& g : scaled.groups) {
    for (double& v : g) v *= 4.0;  // power of two keeps arithmetic exact
  }
  auto r2 = levene_mean(scaled);
  EXPECT_DOUBLE_EQ(r2.F, r0.F);
  EXPECT_DOUBLE_EQ(r2.p, r0.p);
}

// ---------------------------------------------------------------------------
// studentized range distribution

TEST(StudentizedRangeTest, TwoGroupCaseReducesToStudentT) {
  // range of two normals over S equals sqrt(2) |t|, so
  // P(Q <= q; 2, nu) = 2 F_t(q / sqrt 2) - 1
  for (double nu : {5.0, 10.0, 200.0}) {
    boost::math::students_t t(nu);
    for (double q : {0.5, 1.0, 2.0, 3.5, 5.0}) {
      double expected = 2.0 * boost::math::cdf(t, q / std::sqrt(2.0)) - 1.0;
      EXPECT_NEAR(studentized_range_cdf(q, 2, nu), expected, 1e-8)
          << "q=" << q << " nu=" << nu;
    }
    double want = std::sqrt(2.0) *
                  boost::math::quantile(t, 0.5 + 0.95 / 2.0);
    EXPECT_NEAR(studentized_range_quantile(0.95, 2, nu), want, 1e-6);
  }
}

TEST(StudentizedRangeTest, QuantileInvertsTheCdf) {
  for (auto [p, k, nu] : {std::tuple{0.95, 3, 10.0},
                          std::tuple{0.99, 5, 60.0},
                          std::tuple{0.5, 2, 5.0},
                          std::tuple{0.9, 8, 30.0}}) {
    double q = studentized_range_quantile(p, k, nu);
    EXPECT_NEAR(studentized_range_cdf(q, k, nu), p, 1e-9)
        << "p=" << p << " k=" << k << " nu=" << nu;
  }
}

TEST(StudentizedRangeTest, MonotoneInGroupsAndDegreesOfFreedom) {
  double q3 = studentized_range_quantile(0.95, 3, 20.0);
  double q5 = studentized_range_quantile(0.95, 5, 20.0);
  EXPECT_GT(q5, q3);  // wider range across more groups
  double lo_df = studentized_range_quantile(0.95, 3, 5.0);
  double hi_df = studentized_range_quantile(0.95, 3, 500.0);
  EXPECT_GT(lo_df, hi_df);  // heavier tails at low df
  EXPECT_THROW(studentized_range_cdf(1.0, 1, 10.0), ConfigError);
  EXPECT_THROW(studentized_range_cdf(1.0, 3, 0.0), ConfigError);
  EXPECT_THROW(studentized_range_quantile(0.0, 3, 10.0), ConfigError);
  EXPECT_THROW(studentized_range_quantile(1.0, 3, 10.0), ConfigError);
  EXPECT_DOUBLE_EQ(studentized_range_cdf(-1.0, 3, 10.0), 0.0);
}

// ---------------------------------------------------------------------------
// Tukey HSD

TEST(TukeyTest, PairwiseTableOnThreeBalancedGroups) {
  GroupedSample s{{"a", "b", "c"},
                  {{1.0, 2.0, 3.0, 4.0},
                   {2.0, 3.0, 4.0, 5.0},
                   {5.0, 6.0, 7.0, 8.0}}};
  auto rows = tukey_hsd(s);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].group_a, "a");
  EXPECT_EQ(rows[0].group_b, "b");
  EXPECT_EQ(rows[1].group_a, "a");
  EXPECT_EQ(rows[1].group_b, "c");
  EXPECT_EQ(rows[2].group_a, "b");
  EXPECT_EQ(rows[2].group_b, "c");
  EXPECT_DOUBLE_EQ(rows[0].diff, 1.0);
  EXPECT_DOUBLE_EQ(rows[1].diff, 4.0);
  EXPECT_DOUBLE_EQ(rows[2].diff, 3.0);

  // mse = 15/9; balanced spread = sqrt(0.5 * mse * (1/4 + 1/4))
  double spread = std::sqrt(0.5 * (15.0 / 9.0) * 0.5);
  double qcrit = studentized_range_quantile(0.95, 3, 9.0);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.upper - r.lower, 2.0 * qcrit * spread, 1e-9);
    EXPECT_NEAR(0.5 * (r.upper + r.lower), r.diff, 1e-12);
    double q_obs = std::abs(r.diff) / spread;
    EXPECT_NEAR(r.p_adj, 1.0 - studentized_range_cdf(q_obs, 3, 9.0), 1e-12);
  }
  // larger separation earns the smaller adjusted p
  EXPECT_LT(rows[1].p_adj, rows[2].p_adj);
  EXPECT_LT(rows[2].p_adj, rows[0].p_adj);
  // interval excludes zero exactly when the pair is significant at 5%
  EXPECT_TRUE(rows[0].lower < 0.0 && rows[0].upper > 0.0);
  EXPECT_GT(rows[0].p_adj, 0.05);
  EXPECT_GT(rows[1].lower, 0.0);
  EXPECT_LT(rows[1].p_adj, 0.05);

  auto wide = tukey_hsd(s, 0.99);
  EXPECT_LT(wide[0].lower, rows[0].lower);
  EXPECT_GT(wide[0].upper, rows[0].upper);
}

TEST(TukeyTest, TwoGroupAdjustedPEqualsPooledTTest) {
  std::mt19937 urbg(424242);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<int> size_pick(3, 12);
  std::uniform_real_distribution<double> mean_pick(-2.0, 2.0);
  std::uniform_real_distribution<double> sd_pick(0.2, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> a(size_pick(urbg)), b(size_pick(urbg));
    double ma = mean_pick(urbg), mb = mean_pick(urbg);
    double sa = sd_pick(urbg), sb = sd_pick(urbg);
    for (double& v : a) v = ma + sa * noise(urbg);
    for (double& v : b) v = mb + sb * noise(urbg);
    auto rows = tukey_hsd(two_groups(a, b));
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(rows[0].p_adj, pooled_t_pvalue(a, b), 1e-6) << "rep " << rep;
  }
}

TEST(TukeyTest, TukeyKramerHalfWidthForUnequalSizes) {
  std::vector<double> a{3.0, 5.0, 7.0};
  std::vector<double> b{4.0, 4.5, 6.0, 8.0, 9.0, 10.5};
  GroupedSample s = two_groups(a, b);
  auto rows = tukey_hsd(s);
  ASSERT_EQ(rows.size(), 1u);
  double ma = mean(a), mb = mean(b);
  double ssw = 0.0;
  for (double v : a) ssw += (v - ma) * (v - ma);
  for (double v : b) ssw += (v - mb) * (v - mb);
  double mse = ssw / 7.0;
  double spread = std::sqrt(0.5 * mse * (1.0 / 3.0 + 1.0 / 6.0));
  double qcrit = studentized_range_quantile(0.95, 2, 7.0);
  EXPECT_DOUBLE_EQ(rows[0].diff, mb - ma);
  EXPECT_NEAR(rows[0].upper - rows[0].diff, qcrit * spread, 1e-9);
  EXPECT_NEAR(rows[0].diff - rows[0].lower, qcrit * spread, 1e-9);
}

TEST(TukeyTest, DegenerateVarianceHandling) {
  GroupedSample equal{{"a", "b", "c"},
                      {{5.0, 5.0}, {5.0, 5.0}, {5.0, 5.0, 5.0}}};
  auto rows = tukey_hsd(equal);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_DOUBLE_EQ(r.diff, 0.0);
    EXPECT_DOUBLE_EQ(r.lower, 0.0);
    EXPECT_DOUBLE_EQ(r.upper, 0.0);
    EXPECT_DOUBLE_EQ(r.p_adj, 1.0);
  }
  GroupedSample split = two_groups({1.0, 1.0}, {2.0, 2.0});
  EXPECT_THROW(tukey_hsd(split), DataError);
}

TEST(TukeyTest, RejectsOutOfRangeConfidence) {
  GroupedSample s = two_groups({1.0, 2.0}, {3.0, 4.0});
  for (double c : {0.0, 1.0, -0.5, 1.5}) {
    EXPECT_THROW(tukey_hsd(s, c), ConfigError);
  }
}

TEST(TukeyTest, SwappingGroupOrderFlipsTheSign) {
  // integer deviations keep every partial sum exact, so the two orderings
  // must agree bit for bit up to sign
  std::vector<double> a{1.0, 2.0, 3.0};
  std::vector<double> b{3.0, 6.0, 7.0, 8.0};
  auto fwd = tukey_hsd(GroupedSample{{"a", "b"}, {a, b}});
  auto rev = tukey_hsd(GroupedSample{{"b", "a"}, {b, a}});
  ASSERT_EQ(fwd.size(), 1u);
  ASSERT_EQ(rev.size(), 1u);
  EXPECT_EQ(rev[0].group_a, "b");
  EXPECT_EQ(rev[0].group_b, "a");
  EXPECT_DOUBLE_EQ(rev[0].diff, -fwd[0].diff);
  EXPECT_DOUBLE_EQ(rev[0].lower, -fwd[0].upper);
  EXPECT_DOUBLE_EQ(rev[0].upper, -fwd[0].lower);
  EXPECT_DOUBLE_EQ(rev[0].p_adj, fwd[0].p_adj);
}

TEST(TukeyTest, LocationAndScaleEquivariance) {
  // dyadic values with power-of-two group sizes: means and deviations are
  // exact, so shifted/scaled runs must reproduce the originals bit for bit
  GroupedSample base{{"a", "b", "c"},
                     {{1.25, 2.5, 3.0, 4.25},
                      {0.5, 1.75, 5.0, 6.75},
                      {2.0, 9.5}}};
  auto r0 = tukey_hsd(base);
  GroupedSample moved = base;
  for (auto& g : moved.groups) {
    for (double& v : g) v += 128.0;  // dyadic shift: arithmetic stays exact
  }
  auto r1 = tukey_hsd(moved);
  GroupedSample scaled = base;
  for (auto& g : scaled.groups) {
    for (double& v : g) v *= 8.0;
  }
  auto r2 = tukey_hsd(scaled);
  ASSERT_EQ(r0.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(r1[i].diff, r0[i].diff);
    EXPECT_DOUBLE_EQ(r1[i].lower, r0[i].lower);
    EXPECT_DOUBLE_EQ(r1[i].upper, r0[i].upper);
    EXPECT_DOUBLE_EQ(r1[i].p_adj, r0[i].p_adj);
    EXPECT_DOUBLE_EQ(r2[i].diff, 8.0 * r0[i].diff);
    EXPECT_DOUBLE_EQ(r2[i].lower, 8.0 * r0[i].lower);
    EXPECT_DOUBLE_EQ(r2[i].upper, 8.0 * r0[i].upper);
    EXPECT_DOUBLE_EQ(r2[i].p_adj, r0[i].p_adj);
  }
}

TEST(WriteTukeyCsvTest, EmitsSignConventionAndTable) {
  GroupedSample s{{"fy2019", "fy2020"},
                  {{1.0, 2.0, 3.0}, {4.0, 5.0, 7.0}}};
  std::ostringstream out;
  write_tukey_csv(tukey_hsd(s), out);
  std::istringstream in(out.str());
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line,
            "# diff = mean(group_b) - mean(group_a), labels in input order");
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "group_a,group_b,diff,lwr,upr,p_adj");
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line.rfind("fy2019,fy2020,", 0), 0u);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  EXPECT_FALSE(std::getline(in, line));
}

// ---------------------------------------------------------------------------
// quantile helpers

TEST(MathUtilTest, Type7QuantilesAndMoments) {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.1), 1.4);  // h = 0.4
  std::vector<double> even{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(median(even), 2.5);
  std::vector<double> scrambled{4.0, 1.0, 3.0, 2.0};
  EXPECT_DOUBLE_EQ(quantile(scrambled, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(mean(even), 2.5);
  EXPECT_DOUBLE_EQ(sample_variance(even), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(sample_sd(even), std::sqrt(5.0 / 3.0));
  EXPECT_THROW(quantile_sorted({}, 0.5), NumericError);
  std::vector<double> single{7.0};
  EXPECT_DOUBLE_EQ(quantile_sorted(single, 0.5), 7.0);
  EXPECT_DOUBLE_EQ(sample_variance(single), 0.0);
}
