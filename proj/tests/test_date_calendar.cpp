#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "eventimpact/calendar.hpp"
#include "eventimpact/date.hpp"
#include "eventimpact/errors.hpp"

using namespace eventimpact;

namespace {

// Independent day-of-week oracle (Zeller's congruence), mapped to the
// library's Mon=1..Sun=7 convention.
DayOfWeek zeller(int year, int month, int day) {
  int y = year, m = month;
  if (m < 3) {
    m += 12;
    y -= 1;
  }
  int k = y % 100;
  int j = y / 100;
  int h = (day + (13 * (m + 1)) / 5 + k + k / 4 + j / 4 + 5 * j) % 7;
  // h: 0=Saturday, 1=Sunday, 2=Monday, ...
  int iso = ((h + 5) % 7) + 1;  // 1=Monday .. 7=Sunday
  return static_cast<DayOfWeek>(iso);
}

}  // namespace

TEST(Date, DayOfWeekMatchesZellerOracleEveryDay2016To2021) {
  Date d{2016, 1, 1};
  const Date end{2021, 12, 31};
  long checked = 0;
  while (d <= end) {
    ASSERT_EQ(d.day_of_week(), zeller(d.year, d.month, d.day))
        << "mismatch at " << d.to_string();
    ++checked;
    d = d.plus_days(1);
  }
  EXPECT_EQ(checked, 2192);  // 2016 and 2020 are leap years
}

TEST(Date, KnownWeekdays) {
  EXPECT_EQ(Date(2020, 1, 6).day_of_week(), DayOfWeek::Mon);
  EXPECT_EQ(Date(2020, 4, 1).day_of_week(), DayOfWeek::Wed);
  EXPECT_EQ(Date(2021, 3, 31).day_of_week(), DayOfWeek::Wed);
  EXPECT_TRUE(Date(2020, 1, 11).is_weekend());
  EXPECT_TRUE(Date(2020, 1, 12).is_weekend());
  EXPECT_FALSE(Date(2020, 1, 13).is_weekend());
}

TEST(Date, ParseAndToStringRoundTrip) {
  Date d = Date::parse("2020-02-29");
  EXPECT_EQ(d, Date(2020, 2, 29));
  EXPECT_EQ(d.to_string(), "2020-02-29");
  EXPECT_EQ(Date::parse(Date(1999, 12, 31).to_string()), Date(1999, 12, 31));
}

TEST(Date, ParseRejectsMalformedInput) {
  EXPECT_THROW(Date::parse("2020/01/06"), DataError);
  EXPECT_THROW(Date::parse("2020-13-01"), DataError);
  EXPECT_THROW(Date::parse("2021-02-29"), DataError);  // not a leap year
  EXPECT_THROW(Date::parse("20-01-06"), DataError);
  EXPECT_THROW(Date::parse(""), DataError);
}

TEST(Date, ArithmeticIsConsistent) {
  Date d{2020, 2, 27};
  EXPECT_EQ(d.plus_days(3), Date(2020, 3, 1));  // leap February
  EXPECT_EQ(d.plus_days(3).plus_days(-3), d);
  EXPECT_EQ(d.days_until(Date(2020, 3, 1)), 3);
  EXPECT_EQ(Date(2020, 3, 1).days_until(d), -3);
}

TEST(Date, WithYearClampsLeapDay) {
  EXPECT_EQ(Date(2020, 2, 29).with_year(2019), Date(2019, 2, 28));
  EXPECT_EQ(Date(2020, 2, 29).with_year(2016), Date(2016, 2, 29));
  EXPECT_EQ(Date(2020, 7, 15).with_year(2017), Date(2017, 7, 15));
}

TEST(MonthDay, OrderingAndOrdinal) {
  MonthDay a{4, 1}, b{12, 31};
  EXPECT_LT(a, b);
  EXPECT_EQ(MonthDay::of(Date(2020, 4, 1)), a);
  // ordinal is indexed on a leap reference year
  EXPECT_EQ((MonthDay{1, 1}).ordinal(), 1);
  EXPECT_EQ((MonthDay{3, 1}).ordinal(), 61);
  EXPECT_EQ((MonthDay{12, 31}).ordinal(), 366);
  EXPECT_EQ(MonthDay::parse("09-15"), (MonthDay{9, 15}));
}

TEST(Calendar, ParsesCommentsAndClassifies) {
  std::istringstream in(
      "# national holidays\n"
      "2020-01-01\n"
      "2020-01-13  # coming of age day\n"
      "\n"
      "2020-02-11\n");
  HolidayCalendar cal = HolidayCalendar::parse(in);
  EXPECT_EQ(cal.size(), 3u);
  EXPECT_EQ(cal.classify(Date{2020, 1, 1}), DayClass::Holiday);
  EXPECT_EQ(cal.classify(Date{2020, 1, 13}), DayClass::Holiday);
  EXPECT_EQ(cal.classify(Date{2020, 1, 6}), DayClass::Weekday);
  // weekends classify as Holiday without being listed
  EXPECT_EQ(cal.classify(Date{2020, 1, 11}), DayClass::Holiday);
  EXPECT_EQ(cal.classify(Date{2020, 1, 12}), DayClass::Holiday);
  EXPECT_FALSE(cal.is_listed_holiday(Date{2020, 1, 11}));
}

TEST(Calendar, CoverageIsEnforcedNeverDefaulted) {
  std::istringstream in("2020-01-01\n");
  HolidayCalendar cal = HolidayCalendar::parse(in);
  EXPECT_TRUE(cal.covers(Date{2020, 6, 1}));
  EXPECT_FALSE(cal.covers(Date{2021, 1, 1}));
  EXPECT_THROW(cal.classify(Date{2021, 1, 1}), DataError);
  EXPECT_THROW(cal.classify(Date{2019, 12, 31}), DataError);
}

TEST(Calendar, BundledTableCoversItsYearsWithKnownEntries) {
  HolidayCalendar cal =
      HolidayCalendar::load(std::string(EI_SOURCE_DIR) +
                            "/data/holidays_jp.txt");
  EXPECT_LE(cal.coverage_first(), Date(2015, 1, 1));
  EXPECT_GE(cal.coverage_last(), Date(2021, 12, 31));
  // fixed-date and substituted holidays
  EXPECT_EQ(cal.classify(Date{2017, 1, 9}), DayClass::Holiday);
  EXPECT_EQ(cal.classify(Date{2018, 1, 8}), DayClass::Holiday);
  EXPECT_EQ(cal.classify(Date{2019, 1, 14}), DayClass::Holiday);
  EXPECT_EQ(cal.classify(Date{2020, 1, 13}), DayClass::Holiday);
  // plain winter Mondays stay weekdays
  EXPECT_EQ(cal.classify(Date{2019, 1, 7}), DayClass::Weekday);
  EXPECT_EQ(cal.classify(Date{2020, 1, 6}), DayClass::Weekday);
  // one-off 2020 moves for the planned Olympic games
  EXPECT_EQ(cal.classify(Date{2020, 7, 23}), DayClass::Holiday);
  EXPECT_EQ(cal.classify(Date{2020, 7, 24}), DayClass::Holiday);
  EXPECT_EQ(cal.classify(Date{2021, 7, 22}), DayClass::Holiday);
}

TEST(Calendar, EverySundayHolidayPrecedesObservedSubstitute) {
  // The bundled table must encode the substitute-holiday rule: a national
  // holiday falling on Sunday is followed by an observed holiday on the
  // next non-holiday day.
  HolidayCalendar cal =
      HolidayCalendar::load(std::string(EI_SOURCE_DIR) +
                            "/data/holidays_jp.txt");
  int sunday_holidays = 0;
  for (Date d = cal.coverage_first(); d <= cal.coverage_last();
       d = d.plus_days(1)) {
    if (cal.is_listed_holiday(d) && d.day_of_week() == DayOfWeek::Sun) {
      ++sunday_holidays;
      Date sub = d.plus_days(1);
      while (cal.is_listed_holiday(sub)) sub = sub.plus_days(1);
      EXPECT_TRUE(cal.is_listed_holiday(d.plus_days(1)))
          << "no substitute chain after Sunday holiday " << d.to_string();
    }
  }
  EXPECT_GT(sunday_holidays, 0);
}

TEST(CalendarDay, ResolveBundlesDateWeekdayAndClass) {
  std::istringstream in("2020-02-24\n");
  HolidayCalendar cal = HolidayCalendar::parse(in);
  CalendarDay cd = CalendarDay::resolve(Date{2020, 2, 24}, cal);
  EXPECT_EQ(cd.date, Date(2020, 2, 24));
  EXPECT_EQ(cd.day_of_week, DayOfWeek::Mon);
  EXPECT_EQ(cd.day_class, DayClass::Holiday);
}
