#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <string>

#include "eventimpact/errors.hpp"

namespace eventimpact {

enum class DayOfWeek { Mon = 1, Tue, Wed, Thu, Fri, Sat, Sun };

inline const char* to_string(DayOfWeek d) {
  switch (d) {
    case DayOfWeek::Mon: return "Mon";
    case DayOfWeek::Tue: return "Tue";
    case DayOfWeek::Wed: return "Wed";
    case DayOfWeek::Thu: return "Thu";
    case DayOfWeek::Fri: return "Fri";
    case DayOfWeek::Sat: return "Sat";
    case DayOfWeek::Sun: return "Sun";
  }
  return "?";
}

/// Proleptic Gregorian calendar date. Plain value type; all arithmetic goes
/// through std::chrono::sys_days.
struct Date {
  int year = 0;
  int month = 0;  // 1..12
  int day = 0;    // 1..31

  constexpr Date() = default;
  constexpr Date(int y, int m, int d) : year(y), month(m), day(d) {}

  static Date from_days(std::chrono::sys_days sd) {
    std::chrono::year_month_day ymd{sd};
    return Date{int(ymd.year()), int(unsigned(ymd.month())),
                int(unsigned(ymd.day()))};
  }

  std::chrono::sys_days to_days() const {
    return std::chrono::sys_days{std::chrono::year_month_day{
        std::chrono::year{year}, std::chrono::month{unsigned(month)},
        std::chrono::day{unsigned(day)}}};
  }

  bool valid() const {
    if (month < 1 || month > 12 || day < 1 || day > 31) return false;
    std::chrono::year_month_day ymd{std::chrono::year{year},
                                    std::chrono::month{unsigned(month)},
                                    std::chrono::day{unsigned(day)}};
    return ymd.ok();
  }

  DayOfWeek day_of_week() const {
    std::chrono::weekday wd{to_days()};
    return DayOfWeek(wd.iso_encoding());  // Mon=1 .. Sun=7
  }

  bool is_weekend() const {
    auto w = day_of_week();
    return w == DayOfWeek::Sat || w == DayOfWeek::Sun;
  }

  Date plus_days(long n) const {
    return from_days(to_days() + std::chrono::days{n});
  }

  /// Signed day count: other - this.
  long days_until(const Date& other) const {
    return (other.to_days() - to_days()).count();
  }

  /// Same month/day in another year; Feb 29 clamps to Feb 28 when the target
  /// year is not a leap year.
  Date with_year(int y) const {
    Date d{y, month, day};
    if (!d.valid() && month == 2 && day == 29) d.day = 28;
    return d;
  }

  std::string to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
  }

  /// Parses "YYYY-MM-DD" (fixed width). Throws DataError on malformed input.
  static Date parse(const std::string& s) {
    int y = 0, m = 0, d = 0;
    char tail = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
        std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &tail) != 3) {
      throw DataError("malformed ISO date: '" + s + "'");
    }
    Date out{y, m, d};
    if (!out.valid()) throw DataError("invalid calendar date: '" + s + "'");
    return out;
  }

  auto operator<=>(const Date&) const = default;
};

/// Recurring month/day position within a year (period bounds).
struct MonthDay {
  int month = 0;
  int day = 0;

  auto operator<=>(const MonthDay&) const = default;

  /// Ordinal position 1..366 on a leap reference year, so Feb 29 is
  /// representable.
  int ordinal() const {
    static constexpr int cum[12] = {0,  31, 60, 91,  121, 152,
                                    182, 213, 244, 274, 305, 335};
    return cum[month - 1] + day;
  }

  static MonthDay of(const Date& d) { return MonthDay{d.month, d.day}; }

  /// Parses "MM-DD".
  static MonthDay parse(const std::string& s) {
    int m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%d-%d%c", &m, &d, &tail) != 2 || m < 1 ||
        m > 12 || d < 1 || d > 31) {
      throw DataError("malformed month-day: '" + s + "'");
    }
    return MonthDay{m, d};
  }

  std::string to_string() const {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02d-%02d", month, day);
    return buf;
  }
};

}  // namespace eventimpact
