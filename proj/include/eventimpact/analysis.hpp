#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "eventimpact/align.hpp"
#include "eventimpact/calendar.hpp"
#include "eventimpact/errors.hpp"
#include "eventimpact/hash.hpp"
#include "eventimpact/impact.hpp"
#include "eventimpact/model.hpp"
#include "eventimpact/predict.hpp"
#include "eventimpact/rng.hpp"
#include "eventimpact/sampler.hpp"
#include "eventimpact/series.hpp"
#include "eventimpact/windows.hpp"

namespace eventimpact {

/// Deterministic sub-seed for a named stage of a run, so that e.g. the
/// prediction stream does not depend on how many draws the fit consumed.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = char((base >> (8 * i)) & 0xff);
  return fnv1a64(label, fnv1a64(std::string_view(bytes, 8)));
}

/// Aligned training and evaluation samples for one area. Each sample is an
/// included alignment group of the requested day class: the training
/// observation comes from the training year's member date, the evaluation
/// observation from the base (event) year's member date, and the covariate
/// row from the member dates of the configured covariate years. Sample
/// order follows the alignment offset, which is chronological in both
/// segments.
struct SampleSet {
  std::vector<AlignedGroup> groups;  // the full alignment, for emission

  std::vector<int> train_sample_no;
  std::vector<CalendarDay> train_days;
  Eigen::VectorXd y_train;           // NaN where the date has no data
  Eigen::MatrixXd x_train;           // n x K

  std::vector<int> eval_sample_no;
  std::vector<CalendarDay> eval_days;
  Eigen::VectorXd y_eval;
  Eigen::MatrixXd x_eval;

  // Groups skipped because a covariate member date fell outside the
  // covariate window (an unavoidable boundary effect of cross-year
  // alignment); reported, never silent.
  long dropped_train = 0;
  long dropped_eval = 0;
};

namespace detail {

struct GroupSample {
  int sample_no;
  CalendarDay day;
  double y;
  std::vector<double> x;
};

}  // namespace detail

/// The cross-year alignment a window configuration induces: base year = the
/// event year, comparison years = covariate years plus the training year.
/// Identical for every area, so callers may share the result.
inline std::vector<AlignedGroup> alignment_groups(
    const HolidayCalendar& calendar, const AnalysisWindows& w,
    const std::vector<int>& covariate_years) {
  w.validate();
  const int base_year = w.event_date.year;
  const int training_year = w.training_start.year;
  for (int cy : covariate_years) {
    if (cy >= training_year) {
      throw ConfigError("covariate year " + std::to_string(cy) +
                        " does not precede the training year " +
                        std::to_string(training_year));
    }
  }
  std::vector<int> comparisons = covariate_years;
  if (training_year != base_year) comparisons.push_back(training_year);
  return align_years(base_year, comparisons, calendar, w.evaluation_end);
}

inline SampleSet build_samples(const DailySeries& series,
                               const HolidayCalendar& calendar,
                               const AnalysisWindows& w,
                               const std::vector<int>& covariate_years,
                               DayClass day_filter) {
  const int base_year = w.event_date.year;
  const int training_year = w.training_start.year;
  SampleSet out;
  out.groups = alignment_groups(calendar, w, covariate_years);

  const long K = long(covariate_years.size());
  std::vector<detail::GroupSample> train, eval;
  for (const auto& g : out.groups) {
    if (!g.included || g.group_class != day_filter) continue;

    // Covariate row shared by the training and evaluation observation of
    // this group: the aligned demands of the covariate years.
    std::vector<double> x(K);
    bool outside_window = false;
    for (long k = 0; k < K; ++k) {
      Date d = g.member_dates.at(covariate_years[k]);
      if (d < w.covariate_start || w.covariate_end < d) {
        outside_window = true;
        break;
      }
      auto v = series.value_at(d);
      if (!v) {
        throw DataError("area " + series.area_id() +
                        ": no demand value on covariate date " +
                        d.to_string());
      }
      x[k] = *v;
    }

    Date d_train = g.member_dates.at(training_year);
    if (w.training_start <= d_train && d_train <= w.training_end) {
      if (outside_window) {
        ++out.dropped_train;
      } else {
        auto v = series.value_at(d_train);  // absent = missing, fit skips it
        train.push_back({g.sample_no, CalendarDay::resolve(d_train, calendar),
                         v ? *v : std::numeric_limits<double>::quiet_NaN(),
                         x});
      }
    }

    Date d_eval = g.member_dates.at(base_year);
    if (w.event_date <= d_eval && d_eval <= w.evaluation_end) {
      if (outside_window) {
        ++out.dropped_eval;
      } else {
        auto v = series.value_at(d_eval);
        if (!v) {
          throw DataError("area " + series.area_id() +
                          ": post-event demand missing on " +
                          d_eval.to_string() +
                          "; effects need every evaluation day");
        }
        eval.push_back(
            {g.sample_no, CalendarDay::resolve(d_eval, calendar), *v, x});
      }
    }
  }
  if (train.empty()) {
    throw DataError("area " + series.area_id() +
                    ": no training samples after alignment and filtering");
  }
  if (eval.empty()) {
    throw DataError("area " + series.area_id() +
                    ": no evaluation samples after alignment and filtering");
  }

  auto pack = [K](const std::vector<detail::GroupSample>& v,
                  std::vector<int>& nos, std::vector<CalendarDay>& days,
                  Eigen::VectorXd& y, Eigen::MatrixXd& X) {
    const long n = long(v.size());
    y.resize(n);
    X.resize(n, K);
    nos.reserve(v.size());
    days.reserve(v.size());
    for (long i = 0; i < n; ++i) {
      nos.push_back(v[i].sample_no);
      days.push_back(v[i].day);
      y(i) = v[i].y;
      for (long k = 0; k < K; ++k) X(i, k) = v[i].x[k];
    }
  };
  pack(train, out.train_sample_no, out.train_days, out.y_train, out.x_train);
  pack(eval, out.eval_sample_no, out.eval_days, out.y_eval, out.x_eval);
  return out;
}

/// Everything about one area's fit that later stages consume.
struct AnalysisSettings {
  bool level = true;
  bool trend = false;
  int seasonal_period = 0;
  Priors priors = Priors::defaults();
  long n_draws = 10000;
  long n_burn = 2000;
  double confidence = 0.95;
  DayClass day_filter = DayClass::Weekday;
  std::vector<PeriodSpec> periods = default_periods();
  bool keep_state_paths = false;
};

struct AreaAnalysis {
  SampleSet samples;
  PosteriorDraws draws;
  Eigen::MatrixXd cf_paths;  // original scale, rows = draws
  ImpactReport report;
};

/// End-to-end single-area run: alignment, Gibbs fit on the training stream,
/// counterfactual simulation over the evaluation stream, impact report.
/// Deterministic given (inputs, seed); the prediction RNG stream is derived
/// from the seed independently of the fit.
inline AreaAnalysis run_analysis(const DailySeries& series,
                                 const HolidayCalendar& calendar,
                                 const AnalysisWindows& windows,
                                 const std::vector<int>& covariate_years,
                                 const AnalysisSettings& s,
                                 std::uint64_t seed) {
  AreaAnalysis a;
  a.samples = build_samples(series, calendar, windows, covariate_years,
                            s.day_filter);

  ModelSpec spec;
  spec.level = s.level;
  spec.trend = s.trend;
  spec.seasonal_period = s.seasonal_period;
  if (a.samples.x_train.cols() > 0) spec.regression = a.samples.x_train;

  GibbsOptions gopt;
  gopt.keep_state_paths = s.keep_state_paths;
  a.draws = gibbs_fit(spec, a.samples.y_train, s.priors, s.n_draws, s.n_burn,
                      derive_seed(seed, "fit"), gopt);

  Rng prng(derive_seed(seed, "predict"));
  Eigen::MatrixXd post_design =
      a.samples.x_train.cols() > 0
          ? a.samples.x_eval
          : Eigen::MatrixXd(a.samples.y_eval.size(), 0);
  a.cf_paths = posterior_predictive(a.draws, post_design, prng);

  a.report = make_report(windows.event_date, a.samples.eval_days,
                         a.samples.y_eval, a.cf_paths, s.periods,
                         s.day_filter, s.confidence);
  return a;
}

/// Placebo robustness check: the identical analysis with every window and
/// covariate year moved back by `shift_years`. shift 0 reproduces the
/// primary analysis bit for bit (same seed path).
inline AreaAnalysis placebo_shift(const DailySeries& series,
                                  const HolidayCalendar& calendar,
                                  const AnalysisWindows& windows,
                                  const std::vector<int>& covariate_years,
                                  const AnalysisSettings& s,
                                  std::uint64_t seed, int shift_years) {
  if (shift_years < 0) {
    throw ConfigError("placebo shift must be >= 0 years");
  }
  AnalysisWindows w = windows.shifted_back(shift_years);
  std::vector<int> cov;
  cov.reserve(covariate_years.size());
  for (int y : covariate_years) cov.push_back(y - shift_years);
  if (series.first_date() > w.covariate_start) {
    throw DataError("area " + series.area_id() + ": data begins " +
                    series.first_date().to_string() +
                    ", after the shifted covariate window start " +
                    w.covariate_start.to_string() +
                    " (insufficient history for the placebo)");
  }
  AreaAnalysis a = run_analysis(series, calendar, w, cov, s, seed);
  a.report.placebo = shift_years != 0;
  return a;
}

}  // namespace eventimpact
