#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "eventimpact/date.hpp"
#include "eventimpact/errors.hpp"

namespace eventimpact {

/// Day classification used throughout the analysis. Holiday covers weekends
/// and the national holidays listed in the loaded table.
enum class DayClass { Weekday, Holiday };

inline const char* to_string(DayClass c) {
  return c == DayClass::Weekday ? "weekday" : "holiday";
}

/// National-holiday table plus classification rules. Holidays are data, not
/// code: the table is a UTF-8 text file, one ISO date per line, `#` comments
/// and blank lines allowed. The engine never computes movable holidays.
///
/// Coverage is the closed year range spanned by the listed dates (or an
/// explicit override); classifying a date outside coverage is an error, so
/// a thin table can never silently classify a distant year.
class HolidayCalendar {
 public:
  HolidayCalendar() = default;

  explicit HolidayCalendar(std::set<Date> holidays)
      : holidays_(std::move(holidays)) {
    if (holidays_.empty()) {
      throw DataError("holiday table is empty; coverage undefined");
    }
    coverage_first_ = Date{holidays_.begin()->year, 1, 1};
    coverage_last_ = Date{holidays_.rbegin()->year, 12, 31};
  }

  HolidayCalendar(std::set<Date> holidays, Date coverage_first,
                  Date coverage_last)
      : holidays_(std::move(holidays)),
        coverage_first_(coverage_first),
        coverage_last_(coverage_last) {
    if (coverage_last_ < coverage_first_) {
      throw DataError("holiday coverage range is reversed");
    }
  }

  static HolidayCalendar load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open holiday table: " + path);
    return parse(in, path);
  }

  static HolidayCalendar parse(std::istream& in,
                               const std::string& origin = "<stream>") {
    std::set<Date> dates;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      // trim
      auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      auto e = line.find_last_not_of(" \t\r");
      std::string tok = line.substr(b, e - b + 1);
      try {
        dates.insert(Date::parse(tok));
      } catch (const DataError& err) {
        throw DataError(origin + ":" + std::to_string(lineno) + ": " +
                        err.what());
      }
    }
    return HolidayCalendar(std::move(dates));
  }

  bool covers(const Date& d) const {
    return coverage_first_ <= d && d <= coverage_last_;
  }

  Date coverage_first() const { return coverage_first_; }
  Date coverage_last() const { return coverage_last_; }

  bool is_listed_holiday(const Date& d) const { return holidays_.count(d) > 0; }

  /// Saturdays and Sundays always classify as Holiday; other dates are
  /// Holiday only when listed in the table. Throws DataError outside
  /// coverage -- no silent default classification.
  DayClass classify(const Date& d) const {
    if (!covers(d)) {
      throw DataError("date " + d.to_string() +
                      " outside holiday-table coverage [" +
                      coverage_first_.to_string() + ", " +
                      coverage_last_.to_string() + "]");
    }
    if (d.is_weekend() || holidays_.count(d) > 0) return DayClass::Holiday;
    return DayClass::Weekday;
  }

  std::size_t size() const { return holidays_.size(); }

 private:
  std::set<Date> holidays_;
  Date coverage_first_;
  Date coverage_last_;
};

/// A date with its weekday and classification resolved against a calendar.
struct CalendarDay {
  Date date;
  DayOfWeek day_of_week;
  DayClass day_class;

  static CalendarDay resolve(const Date& d, const HolidayCalendar& cal) {
    return CalendarDay{d, d.day_of_week(), cal.classify(d)};
  }
};

}  // namespace eventimpact
