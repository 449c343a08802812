#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "eventimpact/analysis.hpp"

using namespace eventimpact;

namespace {

HolidayCalendar bundled_calendar() {
  return HolidayCalendar::load(std::string(EI_SOURCE_DIR) +
                               "/data/holidays_jp.txt");
}

AnalysisWindows test_windows() {
  return AnalysisWindows{Date(2016, 1, 1),  Date(2019, 3, 31),
                         Date(2019, 4, 1),  Date(2020, 3, 31),
                         Date(2020, 4, 1),  Date(2021, 3, 31)};
}

const std::vector<int> kCovYears{2016, 2017, 2018};

/// Every value is the date's epoch-day count: unique and predictable, for
/// verifying exactly which dates end up in which matrix cell.
DailySeries probe_series(const Date& first, const Date& last) {
  DailySeries s("probe", "MWh");
  for (Date d = first; d <= last; d = d.plus_days(1)) {
    s.append(d, double(d.to_days().time_since_epoch().count()));
  }
  return s;
}

/// Plausible demand: annual cycle plus mild noise, strictly positive.
DailySeries demand_series(const Date& first, const Date& last,
                          std::uint64_t seed) {
  DailySeries s("demo", "MWh");
  Rng gen(seed);
  for (Date d = first; d <= last; d = d.plus_days(1)) {
    double doy = double(MonthDay::of(d).ordinal());
    double season = 80.0 * std::cos(2.0 * 3.14159265358979 * (doy - 15) / 365.25);
    s.append(d, 1000.0 + season + 5.0 * gen.normal());
  }
  return s;
}

}  // namespace

TEST(DeriveSeed, IsStableAndSensitiveToBaseAndLabel) {
  std::uint64_t a = derive_seed(20200401, "fit");
  EXPECT_EQ(a, derive_seed(20200401, "fit"));
  EXPECT_NE(a, derive_seed(20200401, "predict"));
  EXPECT_NE(a, derive_seed(20200402, "fit"));
  EXPECT_NE(derive_seed(0, "a"), derive_seed(0, "b"));
}

TEST(AlignmentGroups, CoversTheEvaluationWindowAndValidatesYears) {
  HolidayCalendar cal = bundled_calendar();
  AnalysisWindows w = test_windows();
  auto groups = alignment_groups(cal, w, kCovYears);
  ASSERT_FALSE(groups.empty());
  // groups run from the base year's first Monday through evaluation end
  EXPECT_EQ(groups.front().member_dates.at(2020), Date(2020, 1, 6));
  EXPECT_EQ(groups.back().member_dates.at(2020), Date(2021, 3, 31));
  // five member years: three covariate years, the training year, the base
  ASSERT_EQ(groups.front().member_dates.size(), 5u);
  EXPECT_TRUE(groups.front().member_dates.count(2019));

  // covariate years must strictly precede the training year
  EXPECT_THROW(alignment_groups(cal, w, {2016, 2019}), ConfigError);
  EXPECT_THROW(alignment_groups(cal, w, {2020}), ConfigError);
}

TEST(BuildSamples, PacksAlignedDatesValuesAndCovariateRows) {
  HolidayCalendar cal = bundled_calendar();
  AnalysisWindows w = test_windows();
  DailySeries series = probe_series(Date(2015, 12, 1), Date(2021, 4, 10));

  SampleSet s = build_samples(series, cal, w, kCovYears, DayClass::Weekday);
  ASSERT_GT(s.y_train.size(), 150);
  ASSERT_GT(s.y_eval.size(), 150);
  ASSERT_EQ(s.x_train.cols(), 3);
  ASSERT_EQ(s.x_eval.cols(), 3);
  ASSERT_EQ(long(s.train_days.size()), s.y_train.size());
  ASSERT_EQ(long(s.eval_days.size()), s.y_eval.size());
  // The last aligned groups of each window spill past covariate_end
  // (2019-03-31) in their 2018 member: base dates 2020-03-30/31 on the
  // training side and 2021-03-29/30/31 on the evaluation side.
  EXPECT_EQ(s.dropped_train, 2);
  EXPECT_EQ(s.dropped_eval, 3);

  // index the full alignment by sample number for cross-checking
  std::map<int, const AlignedGroup*> by_no;
  for (const auto& g : s.groups) {
    if (g.included) by_no[g.sample_no] = &g;
  }
  for (long i = 0; i < s.y_train.size(); ++i) {
    const AlignedGroup* g = by_no.at(s.train_sample_no[i]);
    EXPECT_EQ(s.train_days[i].date, g->member_dates.at(2019));
    EXPECT_EQ(s.train_days[i].day_class, DayClass::Weekday);
    EXPECT_TRUE(w.training_start <= s.train_days[i].date &&
                s.train_days[i].date <= w.training_end);
    EXPECT_DOUBLE_EQ(s.y_train(i), double(s.train_days[i].date.to_days().time_since_epoch().count()));
    for (int k = 0; k < 3; ++k) {
      Date cd = g->member_dates.at(kCovYears[k]);
      EXPECT_TRUE(w.covariate_start <= cd && cd <= w.covariate_end);
      EXPECT_DOUBLE_EQ(s.x_train(i, k), double(cd.to_days().time_since_epoch().count()));
    }
    if (i > 0) {
      EXPECT_LT(s.train_days[i - 1].date, s.train_days[i].date);
      EXPECT_LT(s.train_sample_no[i - 1], s.train_sample_no[i]);
    }
  }
  for (long i = 0; i < s.y_eval.size(); ++i) {
    const AlignedGroup* g = by_no.at(s.eval_sample_no[i]);
    EXPECT_EQ(s.eval_days[i].date, g->member_dates.at(2020));
    EXPECT_TRUE(w.event_date <= s.eval_days[i].date &&
                s.eval_days[i].date <= w.evaluation_end);
    EXPECT_DOUBLE_EQ(s.y_eval(i), double(s.eval_days[i].date.to_days().time_since_epoch().count()));
    // the covariate row is shared with the training side of the group
    for (int k = 0; k < 3; ++k) {
      EXPECT_DOUBLE_EQ(s.x_eval(i, k),
                       double(g->member_dates.at(kCovYears[k]).to_days().time_since_epoch().count()));
    }
  }
}

TEST(BuildSamples, CovariateWindowBoundaryDropsAreCountedNotSilent) {
  HolidayCalendar cal = bundled_calendar();
  AnalysisWindows w = test_windows();
  // start the covariate window in April: aligned member dates of the
  // covariate years sit a few days off the anniversary, so early-April
  // groups fall just outside and must be dropped with a count
  w.covariate_start = Date(2016, 4, 1);
  DailySeries series = probe_series(Date(2015, 12, 1), Date(2021, 4, 10));
  SampleSet s = build_samples(series, cal, w, kCovYears, DayClass::Weekday);
  EXPECT_GT(s.dropped_train + s.dropped_eval, 0);
  // retained rows still honor the tighter window
  for (long i = 0; i < s.x_train.rows(); ++i) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_GE(s.x_train(i, k), double(Date(2016, 4, 1).to_days().time_since_epoch().count()));
    }
  }
}

TEST(BuildSamples, MissingTrainingDaysBecomeNaN) {
  HolidayCalendar cal = bundled_calendar();
  AnalysisWindows w = test_windows();
  DailySeries series("gappy", "MWh");
  for (Date d = Date(2015, 12, 1); d <= Date(2021, 4, 10);
       d = d.plus_days(1)) {
    if (d == Date(2019, 6, 11)) continue;  // a Tuesday in the training window
    series.append(d, double(d.to_days().time_since_epoch().count()));
  }
  SampleSet s = build_samples(series, cal, w, kCovYears, DayClass::Weekday);
  long nan_count = 0;
  for (long i = 0; i < s.y_train.size(); ++i) {
    if (std::isnan(s.y_train(i))) {
      ++nan_count;
      EXPECT_EQ(s.train_days[i].date, Date(2019, 6, 11));
    }
  }
  EXPECT_EQ(nan_count, 1);
}

TEST(BuildSamples, MissingEvaluationDayIsAnError) {
  HolidayCalendar cal = bundled_calendar();
  AnalysisWindows w = test_windows();
  DailySeries series("gappy", "MWh");
  for (Date d = Date(2015, 12, 1); d <= Date(2021, 4, 10);
       d = d.plus_days(1)) {
    if (d == Date(2020, 6, 10)) continue;  // a Wednesday post-event
    series.append(d, double(d.to_days().time_since_epoch().count()));
  }
  EXPECT_THROW(build_samples(series, cal, w, kCovYears, DayClass::Weekday),
               DataError);
}

TEST(RunAnalysis, ProducesCoherentDeterministicResults) {
  HolidayCalendar cal = bundled_calendar();
  AnalysisWindows w = test_windows();
  DailySeries series = demand_series(Date(2015, 12, 1), Date(2021, 4, 10), 5);

  AnalysisSettings s;
  s.n_draws = 300;
  s.n_burn = 100;
  AreaAnalysis a = run_analysis(series, cal, w, kCovYears, s, 20200401);

  EXPECT_EQ(a.draws.seed, derive_seed(20200401, "fit"));
  EXPECT_EQ(a.draws.n_retained(), 200);
  EXPECT_EQ(a.draws.n_covariates(), 3);
  EXPECT_EQ(a.cf_paths.rows(), 200);
  EXPECT_EQ(a.cf_paths.cols(), a.samples.y_eval.size());
  EXPECT_EQ(long(a.report.points.size()), a.samples.y_eval.size());
  ASSERT_EQ(a.report.periods.size(), 5u);  // default period partition
  EXPECT_EQ(a.report.event_date, Date(2020, 4, 1));
  EXPECT_FALSE(a.report.placebo);
  for (const auto& p : a.report.periods) {
    EXPECT_GT(p.n_days, 0);
    EXPECT_LE(p.lower, p.upper);
    EXPECT_GE(p.probability, 0.5);
    EXPECT_LE(p.probability, 1.0);
  }
  // no injected effect in the generator: the estimate should be small
  for (const auto& p : a.report.periods) {
    EXPECT_LT(std::abs(p.relative_effect), 0.05) << p.label;
  }

  AreaAnalysis b = run_analysis(series, cal, w, kCovYears, s, 20200401);
  EXPECT_EQ(a.cf_paths, b.cf_paths);
  EXPECT_EQ(a.draws.obs_var, b.draws.obs_var);
  for (std::size_t i = 0; i < a.report.periods.size(); ++i) {
    EXPECT_DOUBLE_EQ(a.report.periods[i].relative_effect,
                     b.report.periods[i].relative_effect);
  }

  AreaAnalysis c = run_analysis(series, cal, w, kCovYears, s, 999);
  EXPECT_NE(a.cf_paths(0, 0), c.cf_paths(0, 0));
}

TEST(PlaceboShift, ZeroShiftReproducesThePrimaryAnalysisBitwise) {
  HolidayCalendar cal = bundled_calendar();
  AnalysisWindows w = test_windows();
  DailySeries series = demand_series(Date(2015, 12, 1), Date(2021, 4, 10), 6);
  AnalysisSettings s;
  s.n_draws = 200;
  s.n_burn = 50;

  AreaAnalysis primary = run_analysis(series, cal, w, kCovYears, s, 42);
  AreaAnalysis zero = placebo_shift(series, cal, w, kCovYears, s, 42, 0);
  EXPECT_EQ(primary.cf_paths, zero.cf_paths);
  EXPECT_EQ(primary.draws.obs_var, zero.draws.obs_var);
  EXPECT_EQ(primary.draws.final_state, zero.draws.final_state);
  EXPECT_FALSE(zero.report.placebo);
  ASSERT_EQ(primary.report.periods.size(), zero.report.periods.size());
  for (std::size_t i = 0; i < primary.report.periods.size(); ++i) {
    EXPECT_DOUBLE_EQ(primary.report.periods[i].relative_effect,
                     zero.report.periods[i].relative_effect);
    EXPECT_DOUBLE_EQ(primary.report.periods[i].probability,
                     zero.report.periods[i].probability);
  }
}

TEST(PlaceboShift, ShiftedRunMovesEverythingBackOneYear) {
  HolidayCalendar cal = bundled_calendar();
  AnalysisWindows w = test_windows();
  DailySeries series = demand_series(Date(2015, 1, 1), Date(2021, 4, 10), 7);
  AnalysisSettings s;
  s.n_draws = 200;
  s.n_burn = 50;

  AreaAnalysis p = placebo_shift(series, cal, w, kCovYears, s, 42, 1);
  EXPECT_TRUE(p.report.placebo);
  EXPECT_EQ(p.report.event_date, Date(2019, 4, 1));
  for (const auto& d : p.samples.eval_days) {
    EXPECT_GE(d.date, Date(2019, 4, 1));
    EXPECT_LE(d.date, Date(2020, 3, 31));
  }
  for (const auto& d : p.samples.train_days) {
    EXPECT_GE(d.date, Date(2018, 4, 1));
    EXPECT_LE(d.date, Date(2019, 3, 31));
  }
  // no event in the generator: placebo estimates should hover near zero
  for (const auto& pr : p.report.periods) {
    EXPECT_LT(std::abs(pr.relative_effect), 0.05) << pr.label;
  }
}

TEST(PlaceboShift, RejectsNegativeShiftAndInsufficientHistory) {
  HolidayCalendar cal = bundled_calendar();
  AnalysisWindows w = test_windows();
  DailySeries series = demand_series(Date(2016, 1, 1), Date(2021, 4, 10), 8);
  AnalysisSettings s;
  EXPECT_THROW(placebo_shift(series, cal, w, kCovYears, s, 1, -1),
               ConfigError);
  // shifting one year needs data back to 2015-01-01
  EXPECT_THROW(placebo_shift(series, cal, w, kCovYears, s, 1, 1), DataError);
}
