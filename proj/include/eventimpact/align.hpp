#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "eventimpact/calendar.hpp"
#include "eventimpact/date.hpp"
#include "eventimpact/errors.hpp"
#include "eventimpact/series.hpp"

namespace eventimpact {

/// One offset position in a cross-year alignment: the dates sitting the same
/// number of days after each year's reference Monday. A group enters the
/// analysis only when all member dates share one day class; sample numbers
/// run 1,2,3,... over included groups in base-date order.
struct AlignedGroup {
  int offset = 0;  // days after the reference Monday
  std::map<int, Date> member_dates;
  bool included = false;
  DayClass group_class = DayClass::Weekday;  // defined only when included
  int sample_no = 0;                         // 0 when not included
};

inline Date first_monday_of_year(int year) {
  Date d{year, 1, 1};
  while (d.day_of_week() != DayOfWeek::Mon) d = d.plus_days(1);
  return d;
}

/// The Monday of `year` closest to base_reference's month/day anniversary in
/// that year; ties break toward the earlier Monday. base_reference must be a
/// Monday.
inline Date reference_monday(int year, const Date& base_reference) {
  if (base_reference.day_of_week() != DayOfWeek::Mon) {
    throw DataError("base reference " + base_reference.to_string() +
                    " is not a Monday");
  }
  Date anchor = base_reference.with_year(year);
  // Mondays bracketing the anchor, restricted to `year`.
  Date before = anchor;
  while (before.day_of_week() != DayOfWeek::Mon) before = before.plus_days(-1);
  Date after = anchor;
  while (after.day_of_week() != DayOfWeek::Mon) after = after.plus_days(1);
  if (before.year != year) return after;
  if (after.year != year) return before;
  long db = before.days_until(anchor);
  long da = anchor.days_until(after);
  return (db <= da) ? before : after;  // tie prefers the earlier Monday
}

/// Builds aligned day groups: the base year's reference Monday is its first
/// Monday; every other year's reference is the Monday nearest that date's
/// anniversary. Offset k pairs reference+k across all years, for every k with
/// base date on or before `through`. Groups are included only when all member
/// dates (base year too) carry the same day class.
///
/// Throws DataError if any produced date lacks holiday-table coverage.
inline std::vector<AlignedGroup> align_years(
    int base_year, const std::vector<int>& comparison_years,
    const HolidayCalendar& calendar, const Date& through) {
  if (comparison_years.empty()) {
    throw DataError("alignment requires at least one comparison year");
  }
  Date base_ref = first_monday_of_year(base_year);
  if (through < base_ref) {
    throw DataError("alignment end " + through.to_string() +
                    " precedes the base reference Monday " +
                    base_ref.to_string());
  }
  std::map<int, Date> refs;
  refs[base_year] = base_ref;
  for (int y : comparison_years) {
    if (y == base_year) {
      throw DataError("comparison years must differ from the base year");
    }
    refs[y] = reference_monday(y, base_ref);
  }

  std::vector<AlignedGroup> groups;
  int next_sample = 1;
  for (int k = 0; base_ref.plus_days(k) <= through; ++k) {
    AlignedGroup g;
    g.offset = k;
    bool first = true;
    DayClass cls = DayClass::Weekday;
    bool homogeneous = true;
    for (const auto& [year, ref] : refs) {
      Date d = ref.plus_days(k);
      g.member_dates[year] = d;
      DayClass c = calendar.classify(d);
      if (first) {
        cls = c;
        first = false;
      } else if (c != cls) {
        homogeneous = false;
      }
    }
    g.included = homogeneous;
    if (g.included) {
      g.group_class = cls;
      g.sample_no = next_sample++;
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

/// Demand values for the included groups of one class, one row per sample
/// number (ascending), one column per year (ascending). A date absent from
/// its year's series is an error, never a silent gap.
inline Eigen::MatrixXd extract_matched_series(
    const std::map<int, const DailySeries*>& series_by_year,
    const std::vector<AlignedGroup>& groups, DayClass class_filter) {
  if (series_by_year.empty()) {
    throw DataError("extract_matched_series: no yearly series supplied");
  }
  std::vector<const AlignedGroup*> selected;
  for (const auto& g : groups) {
    if (g.included && g.group_class == class_filter) selected.push_back(&g);
  }
  if (selected.empty()) {
    throw DataError("extract_matched_series: no included groups of class " +
                    std::string(to_string(class_filter)));
  }
  std::vector<int> years;
  for (const auto& [y, s] : series_by_year) years.push_back(y);

  Eigen::MatrixXd out(selected.size(), years.size());
  for (std::size_t r = 0; r < selected.size(); ++r) {
    for (std::size_t c = 0; c < years.size(); ++c) {
      int year = years[c];
      auto it = selected[r]->member_dates.find(year);
      if (it == selected[r]->member_dates.end()) {
        throw DataError("group " + std::to_string(selected[r]->sample_no) +
                        " has no member for year " + std::to_string(year));
      }
      auto v = series_by_year.at(year)->value_at(it->second);
      if (!v) {
        throw DataError("missing demand value: year " + std::to_string(year) +
                        ", date " + it->second.to_string());
      }
      out(long(r), long(c)) = *v;
    }
  }
  return out;
}

/// CSV emission: sample_no, class, one date column per year, included flag.
inline void write_groups_csv(const std::vector<AlignedGroup>& groups,
                             std::ostream& out) {
  if (groups.empty()) {
    out << "sample_no,day_of_week,class,included\n";
    return;
  }
  out << "sample_no,day_of_week,class";
  for (const auto& [year, d] : groups.front().member_dates) {
    out << ',' << year;
  }
  out << ",included\n";
  for (const auto& g : groups) {
    const Date& base = g.member_dates.rbegin()->second;
    out << (g.included ? std::to_string(g.sample_no) : std::string("-")) << ','
        << to_string(base.day_of_week()) << ','
        << (g.included ? to_string(g.group_class) : "mixed");
    for (const auto& [year, d] : g.member_dates) out << ',' << d.to_string();
    out << ',' << (g.included ? "yes" : "no") << '\n';
  }
}

}  // namespace eventimpact
