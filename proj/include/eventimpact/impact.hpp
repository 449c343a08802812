#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "eventimpact/calendar.hpp"
#include "eventimpact/date.hpp"
#include "eventimpact/errors.hpp"
#include "eventimpact/mathutil.hpp"
#include "eventimpact/windows.hpp"

namespace eventimpact {

/// Central credible summary of one empirical draw distribution. Quantiles
/// use linear interpolation between order statistics throughout; the report
/// metadata states this convention.
struct EffectSummary {
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct PointImpact {
  Date date;
  double actual = 0.0;
  EffectSummary counterfactual;
  EffectSummary effect;      // actual - counterfactual
  EffectSummary cumulative;  // running sum of effects, per draw
};

struct PeriodImpact {
  std::string label;
  Date from;  // first evaluation date falling in the period
  Date till;  // last evaluation date falling in the period
  int n_days = 0;  // dates passing the day filter
  double relative_effect = 0.0;  // median of (sum actual - sum cf) / sum cf
  double lower = 0.0;
  double upper = 0.0;
  double probability = 0.5;  // posterior probability of the majority sign
};

struct ImpactReport {
  Date event_date;
  long n_draws = 0;
  double confidence = 0.95;
  DayClass day_filter = DayClass::Weekday;
  bool placebo = false;
  std::string quantile_convention =
      "linear interpolation between order statistics";
  std::vector<PointImpact> points;
  std::vector<PeriodImpact> periods;
};

/// Draw-by-draw pointwise effects actual[t] - cf(draw, t); one row per draw.
inline Eigen::MatrixXd pointwise_effects(const Eigen::VectorXd& actual,
                                         const Eigen::MatrixXd& cf_paths) {
  if (actual.size() != cf_paths.cols()) {
    throw DataError("actual series length " + std::to_string(actual.size()) +
                    " does not match counterfactual columns " +
                    std::to_string(cf_paths.cols()));
  }
  if (!actual.allFinite()) {
    throw DataError("post-event actuals contain missing or non-finite "
                    "values; an effect cannot be computed on a missing day");
  }
  return (-cf_paths).rowwise() + actual.transpose();
}

namespace detail {

inline EffectSummary summarize_column(const Eigen::VectorXd& draws,
                                      double confidence) {
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  std::sort(v.begin(), v.end());
  double tail = 0.5 * (1.0 - confidence);
  EffectSummary s;
  s.lower = quantile_sorted(v, tail);
  s.median = quantile_sorted(v, 0.5);
  s.upper = quantile_sorted(v, 1.0 - tail);
  return s;
}

/// Probability of the majority sign, with exact zeros split evenly between
/// the signs so a degenerate all-zero distribution reports 0.5, never 0.
inline double sign_probability(const Eigen::VectorXd& draws) {
  double pos = 0, neg = 0, zero = 0;
  for (long i = 0; i < draws.size(); ++i) {
    if (draws(i) > 0) ++pos;
    else if (draws(i) < 0) ++neg;
    else ++zero;
  }
  double n = double(draws.size());
  double p_pos = (pos + 0.5 * zero) / n;
  double p_neg = (neg + 0.5 * zero) / n;
  return std::max(p_pos, p_neg);
}

}  // namespace detail

/// Per-period relative effects over days passing the day filter: for each
/// draw, r = (sum of actuals - sum of counterfactuals) / sum of
/// counterfactuals across the period's retained dates.
inline std::vector<PeriodImpact> period_summary(
    const Eigen::VectorXd& actual, const Eigen::MatrixXd& cf_paths,
    const std::vector<CalendarDay>& days,
    const std::vector<PeriodSpec>& periods, DayClass day_filter,
    double confidence = 0.95) {
  if (long(days.size()) != actual.size() ||
      actual.size() != cf_paths.cols()) {
    throw DataError("period_summary: days, actuals and counterfactual "
                    "columns must agree");
  }
  std::vector<PeriodImpact> out;
  out.reserve(periods.size());
  for (const auto& p : periods) {
    std::vector<long> idx;
    Date from{}, till{};
    bool any_date = false;
    for (long t = 0; t < long(days.size()); ++t) {
      if (!p.contains(days[t].date)) continue;
      if (!any_date) from = days[t].date;
      till = days[t].date;
      any_date = true;
      if (days[t].day_class == day_filter) idx.push_back(t);
    }
    if (idx.empty()) {
      throw DataError("period '" + p.label +
                      "' retains no evaluation days of class " +
                      std::string(to_string(day_filter)));
    }
    double sum_actual = 0.0;
    for (long t : idx) sum_actual += actual(t);
    Eigen::VectorXd r(cf_paths.rows());
    for (long d = 0; d < cf_paths.rows(); ++d) {
      double sum_cf = 0.0;
      for (long t : idx) sum_cf += cf_paths(d, t);
      if (sum_cf == 0.0) {
        throw NumericError("period '" + p.label +
                           "' has a zero counterfactual sum; relative "
                           "effect undefined");
      }
      r(d) = (sum_actual - sum_cf) / sum_cf;
    }
    PeriodImpact pi;
    pi.label = p.label;
    pi.from = from;
    pi.till = till;
    pi.n_days = int(idx.size());
    EffectSummary s = detail::summarize_column(r, confidence);
    pi.relative_effect = s.median;
    pi.lower = s.lower;
    pi.upper = s.upper;
    pi.probability = detail::sign_probability(r);
    out.push_back(std::move(pi));
  }
  return out;
}

/// Full report over the evaluation dates: pointwise and cumulative
/// distributions per date plus the per-period table. Cumulative effects are
/// exact per-draw prefix sums of the pointwise effects.
inline ImpactReport make_report(const Date& event_date,
                                const std::vector<CalendarDay>& days,
                                const Eigen::VectorXd& actual,
                                const Eigen::MatrixXd& cf_paths,
                                const std::vector<PeriodSpec>& periods,
                                DayClass day_filter, double confidence = 0.95) {
  if (long(days.size()) != actual.size()) {
    throw DataError("evaluation dates and actuals differ in length");
  }
  Eigen::MatrixXd effects = pointwise_effects(actual, cf_paths);
  ImpactReport rep;
  rep.event_date = event_date;
  rep.n_draws = cf_paths.rows();
  rep.confidence = confidence;
  rep.day_filter = day_filter;
  rep.points.reserve(days.size());

  Eigen::MatrixXd cumulative = effects;
  for (long t = 1; t < cumulative.cols(); ++t) {
    cumulative.col(t) += cumulative.col(t - 1);
  }
  for (long t = 0; t < long(days.size()); ++t) {
    PointImpact pt;
    pt.date = days[t].date;
    pt.actual = actual(t);
    pt.counterfactual = detail::summarize_column(cf_paths.col(t), confidence);
    pt.effect = detail::summarize_column(effects.col(t), confidence);
    pt.cumulative = detail::summarize_column(cumulative.col(t), confidence);
    rep.points.push_back(std::move(pt));
  }
  rep.periods = period_summary(actual, cf_paths, days, periods, day_filter,
                               confidence);
  return rep;
}

namespace detail {
inline std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// Plot-ready data for the three stacked panels (observed vs counterfactual,
/// pointwise effect, cumulative effect), one row per evaluation date.
inline void write_figure_csv(const ImpactReport& rep, std::ostream& out) {
  out << "date,actual,cf_median,cf_lower,cf_upper,"
         "effect_median,effect_lower,effect_upper,"
         "cum_median,cum_lower,cum_upper\n";
  for (const auto& p : rep.points) {
    out << p.date.to_string() << ',' << detail::g17(p.actual) << ','
        << detail::g17(p.counterfactual.median) << ','
        << detail::g17(p.counterfactual.lower) << ','
        << detail::g17(p.counterfactual.upper) << ','
        << detail::g17(p.effect.median) << ',' << detail::g17(p.effect.lower)
        << ',' << detail::g17(p.effect.upper) << ','
        << detail::g17(p.cumulative.median) << ','
        << detail::g17(p.cumulative.lower) << ','
        << detail::g17(p.cumulative.upper) << '\n';
  }
}

/// Per-period summary table as JSON (label, from, till, relative effect with
/// interval, posterior probability).
inline nlohmann::json periods_json(const ImpactReport& rep) {
  nlohmann::json j;
  j["event_date"] = rep.event_date.to_string();
  j["n_draws"] = rep.n_draws;
  j["confidence"] = rep.confidence;
  j["day_filter"] = to_string(rep.day_filter);
  j["placebo"] = rep.placebo;
  j["quantile_convention"] = rep.quantile_convention;
  j["periods"] = nlohmann::json::array();
  for (const auto& p : rep.periods) {
    nlohmann::json row;
    row["label"] = p.label;
    row["from"] = p.from.to_string();
    row["till"] = p.till.to_string();
    row["n_days"] = p.n_days;
    row["relative_effect"] = p.relative_effect;
    row["lower"] = p.lower;
    row["upper"] = p.upper;
    row["probability"] = p.probability;
    j["periods"].push_back(row);
  }
  return j;
}

}  // namespace eventimpact
