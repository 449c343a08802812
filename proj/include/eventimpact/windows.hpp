#pragma once

#include <string>
#include <vector>

#include "eventimpact/date.hpp"
#include "eventimpact/errors.hpp"

namespace eventimpact {

/// The four analysis windows: covariate construction, training (pre-event
/// fit), the event date (first post-event day), and the evaluation range.
struct AnalysisWindows {
  Date covariate_start;
  Date covariate_end;
  Date training_start;
  Date training_end;
  Date event_date;      // first post-event date
  Date evaluation_end;  // evaluation window is [event_date, evaluation_end]

  void validate() const {
    auto require = [](bool ok, const std::string& msg) {
      if (!ok) throw ConfigError("analysis windows: " + msg);
    };
    require(covariate_start <= covariate_end, "covariate window reversed");
    require(training_start <= training_end, "training window reversed");
    require(covariate_end < training_start,
            "covariate window must precede training window");
    require(training_end < event_date,
            "training window must precede event date");
    require(event_date <= evaluation_end,
            "event date must not be after evaluation end");
  }

  /// Moves every window back by `years` (placebo analysis). Feb 29 clamps to
  /// Feb 28 in non-leap targets.
  AnalysisWindows shifted_back(int years) const {
    auto sh = [&](const Date& d) { return d.with_year(d.year - years); };
    return AnalysisWindows{sh(covariate_start), sh(covariate_end),
                           sh(training_start),  sh(training_end),
                           sh(event_date),      sh(evaluation_end)};
  }
};

/// A labeled recurring period within the evaluation year, bounded by
/// month/day positions. A period may wrap the calendar year end
/// (e.g. Dec 16 .. Jan 15).
struct PeriodSpec {
  std::string label;
  MonthDay start;
  MonthDay end;

  bool wraps() const { return end < start; }

  bool contains(const Date& d) const {
    MonthDay md = MonthDay::of(d);
    if (!wraps()) return start <= md && md <= end;
    return md >= start || md <= end;
  }

  /// Period length in days on a leap reference year.
  int length_days() const {
    int s = start.ordinal(), e = end.ordinal();
    return wraps() ? (366 - s + 1) + e : e - s + 1;
  }
};

/// The five default periods partitioning the evaluation year by climate:
/// mild spring, hot summer, mild autumn, peak winter, late winter.
inline std::vector<PeriodSpec> default_periods() {
  return {
      {"Apr01-Jul31", {4, 1}, {7, 31}},  {"Aug01-Sep15", {8, 1}, {9, 15}},
      {"Sep16-Dec15", {9, 16}, {12, 15}}, {"Dec16-Jan15", {12, 16}, {1, 15}},
      {"Jan16-Mar31", {1, 16}, {3, 31}},
  };
}

/// Verifies the periods form a cyclic partition of the year: each period
/// ends the day before the next begins and the lengths sum to 366 (leap
/// reference year, so Feb 29 is covered).
inline void validate_period_partition(const std::vector<PeriodSpec>& periods) {
  if (periods.size() < 2) {
    throw ConfigError("period list must contain at least 2 periods");
  }
  int total = 0;
  for (std::size_t i = 0; i < periods.size(); ++i) {
    const auto& cur = periods[i];
    const auto& nxt = periods[(i + 1) % periods.size()];
    // day after cur.end on the leap reference year
    int after = cur.end.ordinal() % 366 + 1;
    if (after != nxt.start.ordinal()) {
      throw ConfigError("periods '" + cur.label + "' and '" + nxt.label +
                        "' do not meet (gap or overlap)");
    }
    total += cur.length_days();
  }
  if (total != 366) {
    throw ConfigError("periods do not partition the year (covered " +
                      std::to_string(total) + " of 366 days)");
  }
}

}  // namespace eventimpact
