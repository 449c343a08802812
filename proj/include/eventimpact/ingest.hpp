#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iconv.h>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eventimpact/date.hpp"
#include "eventimpact/errors.hpp"
#include "eventimpact/panel.hpp"
#include "eventimpact/series.hpp"

namespace eventimpact {

struct HourlyRecord {
  std::string area_id;
  Date date;
  int hour = 0;  // 0..23
  double demand = 0.0;
};

struct MobilityRecord {
  std::string area_id;
  Date date;
  double residential = 0.0;
  double workplaces = 0.0;
  double retail_recreation = 0.0;
  double grocery_pharmacy = 0.0;
};

enum class VoltageClass { ExtraHigh, High, Lighting, Low, Other };

inline const char* to_string(VoltageClass v) {
  switch (v) {
    case VoltageClass::ExtraHigh: return "extra_high";
    case VoltageClass::High: return "high";
    case VoltageClass::Lighting: return "lighting";
    case VoltageClass::Low: return "low";
    default: return "other";
  }
}

inline VoltageClass voltage_class_from(const std::string& s) {
  if (s == "extra_high") return VoltageClass::ExtraHigh;
  if (s == "high") return VoltageClass::High;
  if (s == "lighting") return VoltageClass::Lighting;
  if (s == "low") return VoltageClass::Low;
  if (s == "other") return VoltageClass::Other;
  throw DataError("unknown voltage class '" + s + "'");
}

/// Monthly demand by voltage class. Deliberately a separate type from
/// DailySeries: this series measures something the daily analysis does not,
/// and must never be mixed into it.
struct VoltageClassRecord {
  int year = 0;
  int month = 0;
  VoltageClass voltage_class = VoltageClass::Other;
  double demand = 0.0;
};

/// Per-utility file description. Layout differences between the ten
/// utilities are data, not code: everything a parser needs to know lives
/// here and comes from the run configuration.
struct DemandLayout {
  std::string encoding = "utf-8";    // "utf-8" or "shift_jis"
  int skip_rows = 1;                 // header rows before data
  std::string shape = "long";       // "long": one row per hour;
                                     // "wide": one row per day, 24 columns
  int date_col = 0;
  std::string date_format = "iso";  // "iso" | "slash" | "compact"
  int hour_col = 1;                  // long shape only
  int hour_base = 0;                 // first hour written as 0 or as 1
  int value_col = 2;                 // long: the value; wide: first of 24
  double unit_scale = 1.0;           // multiplies every parsed value
  std::string unit = "MWh";
};

struct RejectRow {
  long line = 0;
  std::string reason;
};

struct RejectReport {
  std::string path;
  long data_rows = 0;
  std::vector<RejectRow> rows;
};

struct DemandParseResult {
  std::vector<HourlyRecord> records;
  RejectReport rejects;
};

namespace detail {

/// Byte re-encoding through iconv; only invoked for non-UTF-8 layouts.
inline std::string to_utf8(const std::string& bytes,
                           const std::string& from_encoding) {
  iconv_t cd = iconv_open("UTF-8", from_encoding.c_str());
  if (cd == reinterpret_cast<iconv_t>(-1)) {
    throw DataError("unsupported source encoding '" + from_encoding + "'");
  }
  std::string out;
  out.resize(bytes.size() * 4 + 16);
  char* inp = const_cast<char*>(bytes.data());
  std::size_t inleft = bytes.size();
  char* outp = out.data();
  std::size_t outleft = out.size();
  std::size_t rc = iconv(cd, &inp, &inleft, &outp, &outleft);
  iconv_close(cd);
  if (rc == std::size_t(-1)) {
    throw DataError("byte sequence is not valid " + from_encoding);
  }
  out.resize(out.size() - outleft);
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::optional<Date> parse_layout_date(const std::string& cell,
                                             const std::string& format) {
  int y = 0, m = 0, d = 0;
  if (format == "iso") {
    if (std::sscanf(cell.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3) {
      return std::nullopt;
    }
  } else if (format == "slash") {
    if (std::sscanf(cell.c_str(), "%d/%d/%d", &y, &m, &d) != 3) {
      return std::nullopt;
    }
  } else if (format == "compact") {
    if (cell.size() != 8 ||
        std::sscanf(cell.c_str(), "%4d%2d%2d", &y, &m, &d) != 3) {
      return std::nullopt;
    }
  } else {
    throw ConfigError("unknown date format '" + format + "'");
  }
  Date out{y, m, d};
  if (!out.valid()) return std::nullopt;
  return out;
}

inline std::optional<double> parse_number(const std::string& cell) {
  std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

/// "13", "13:00", "13時" all mean hour 13 (before hour_base shifting).
inline std::optional<int> parse_hour(const std::string& cell) {
  std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  std::size_t i = 0;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
  if (i == 0) return std::nullopt;
  return std::stoi(t.substr(0, i));
}

}  // namespace detail

/// Parses one utility's demand file per its declared layout. Malformed rows
/// go to the rejects report with line numbers; more than 1% rejected rows is
/// treated as the wrong layout and fails hard.
inline DemandParseResult parse_demand_file(const std::string& path,
                                           const DemandLayout& layout,
                                           const std::string& area_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open demand file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string content = buf.str();
  if (layout.encoding != "utf-8" && layout.encoding != "ascii") {
    content = detail::to_utf8(content, layout.encoding == "shift_jis"
                                           ? "SHIFT_JIS"
                                           : layout.encoding);
  }
  if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    content.erase(0, 3);
  }
  if (layout.shape != "long" && layout.shape != "wide") {
    throw ConfigError("unknown demand layout shape '" + layout.shape + "'");
  }

  DemandParseResult res;
  res.rejects.path = path;
  std::istringstream lines(content);
  std::string line;
  long lineno = 0;
  std::set<std::pair<Date, int>> seen;
  auto reject = [&](long ln, const std::string& why) {
    res.rejects.rows.push_back({ln, why});
  };

  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno <= layout.skip_rows) continue;
    if (detail::trim(line).empty()) continue;
    ++res.rejects.data_rows;
    std::vector<std::string> cells = detail::split_csv_line(line);

    int need = layout.shape == "long"
                   ? std::max({layout.date_col, layout.hour_col,
                               layout.value_col}) + 1
                   : std::max(layout.date_col, layout.value_col + 23) + 1;
    if (long(cells.size()) < need) {
      reject(lineno, "expected at least " + std::to_string(need) +
                         " columns, found " + std::to_string(cells.size()));
      continue;
    }
    auto date = detail::parse_layout_date(
        detail::trim(cells[layout.date_col]), layout.date_format);
    if (!date) {
      reject(lineno, "unparseable date '" + cells[layout.date_col] + "'");
      continue;
    }

    if (layout.shape == "long") {
      auto hour = detail::parse_hour(cells[layout.hour_col]);
      if (!hour) {
        reject(lineno, "unparseable hour '" + cells[layout.hour_col] + "'");
        continue;
      }
      int h = *hour - layout.hour_base;
      if (h < 0 || h > 23) {
        reject(lineno, "hour " + std::to_string(*hour) +
                           " out of range for hour_base " +
                           std::to_string(layout.hour_base));
        continue;
      }
      auto value = detail::parse_number(cells[layout.value_col]);
      if (!value) {
        reject(lineno, "unparseable demand '" + cells[layout.value_col] +
                           "'");
        continue;
      }
      if (*value < 0) {
        reject(lineno, "negative demand");
        continue;
      }
      if (!seen.insert({*date, h}).second) {
        reject(lineno, "duplicate hour " + std::to_string(h) + " for " +
                           date->to_string());
        continue;
      }
      res.records.push_back(
          {area_id, *date, h, *value * layout.unit_scale});
    } else {
      bool ok = true;
      std::vector<double> vals(24);
      for (int h = 0; h < 24 && ok; ++h) {
        auto value = detail::parse_number(cells[layout.value_col + h]);
        if (!value || *value < 0) {
          reject(lineno, std::string(!value ? "unparseable" : "negative") +
                             " demand in hour column " + std::to_string(h));
          ok = false;
        } else {
          vals[h] = *value;
        }
      }
      if (!ok) continue;
      if (!seen.insert({*date, 0}).second) {
        reject(lineno, "duplicate day " + date->to_string());
        continue;
      }
      for (int h = 0; h < 24; ++h) {
        res.records.push_back(
            {area_id, *date, h, vals[h] * layout.unit_scale});
      }
    }
  }

  if (res.rejects.data_rows == 0) {
    throw DataError(path + ": no data rows under the configured layout");
  }
  if (100 * long(res.rejects.rows.size()) > res.rejects.data_rows) {
    throw DataError(path + ": " + std::to_string(res.rejects.rows.size()) +
                    " of " + std::to_string(res.rejects.data_rows) +
                    " rows rejected (>1%); layout is likely wrong");
  }
  return res;
}

/// Sums verified 24-hour coverage into one DailySeries per area (insertion
/// order = first appearance in the record stream).
inline std::vector<DailySeries> daily_totals(
    const std::vector<HourlyRecord>& records, const std::string& unit) {
  std::vector<std::string> order;
  std::map<std::string, std::map<Date, std::pair<unsigned, double>>> acc;
  std::map<std::string, std::map<Date, unsigned>> hours_seen;
  for (const auto& r : records) {
    if (acc.find(r.area_id) == acc.end()) order.push_back(r.area_id);
    auto& day = acc[r.area_id][r.date];
    auto& mask = hours_seen[r.area_id][r.date];
    mask |= 1u << r.hour;
    day.first += 1;
    day.second += r.demand;
  }
  std::string missing;
  int missing_count = 0;
  for (const auto& [area, days] : hours_seen) {
    for (const auto& [date, mask] : days) {
      for (int h = 0; h < 24; ++h) {
        if (!(mask & (1u << h))) {
          if (missing_count < 10) {
            missing += (missing.empty() ? "" : ", ") + area + " " +
                       date.to_string() + " hour " + std::to_string(h);
          }
          ++missing_count;
        }
      }
    }
  }
  if (missing_count > 0) {
    throw DataError("incomplete days: missing " +
                    std::to_string(missing_count) + " (date, hour) pairs: " +
                    missing + (missing_count > 10 ? ", ..." : ""));
  }
  std::vector<DailySeries> out;
  for (const auto& area : order) {
    DailySeries s(area, unit);
    for (const auto& [date, cnt_sum] : acc[area]) {
      s.append(date, cnt_sum.second);
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Region map: which prefectures make up each area, with aggregation
/// weights. The weighting rule is user-supplied data; absent weights mean
/// equal weighting.
struct RegionMap {
  struct Member {
    std::string prefecture;  // sub-region name as written in the report file
    double weight = 1.0;
  };
  // Preserves declaration order of areas.
  std::vector<std::pair<std::string, std::vector<Member>>> areas;
};

struct MobilityParseResult {
  std::vector<MobilityRecord> records;
  std::vector<std::string> warnings;  // unmapped regions etc.
  long skipped_rows = 0;              // rows with empty needed cells
};

/// Parses a community-mobility style CSV (standard column names) and
/// aggregates prefecture rows to areas by the region map's weights,
/// renormalized over the prefectures present on a given date.
inline MobilityParseResult parse_mobility(const std::string& path,
                                          const RegionMap& region_map) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open mobility file " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  std::vector<std::string> header = detail::split_csv_line(line);
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError(path + ": missing required column '" + name + "'");
    }
    return long(it - header.begin());
  };
  const long c_sub1 = col("sub_region_1");
  const long c_sub2 = col("sub_region_2");
  const long c_date = col("date");
  const long c_retl = col("retail_and_recreation_percent_change_from_baseline");
  const long c_grcy = col("grocery_and_pharmacy_percent_change_from_baseline");
  const long c_wrk = col("workplaces_percent_change_from_baseline");
  const long c_resi = col("residential_percent_change_from_baseline");

  // prefecture -> list of (area index, weight)
  std::map<std::string, std::vector<std::pair<std::size_t, double>>> member_of;
  for (std::size_t a = 0; a < region_map.areas.size(); ++a) {
    for (const auto& m : region_map.areas[a].second) {
      member_of[m.prefecture].push_back({a, m.weight});
    }
  }

  struct Cell {
    double wsum = 0;
    double resi = 0, wrk = 0, retl = 0, grcy = 0;
  };
  std::map<std::pair<std::size_t, Date>, Cell> agg;
  std::set<std::string> unmapped;
  MobilityParseResult res;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = detail::split_csv_line(line);
    if (long(cells.size()) <= std::max({c_sub1, c_sub2, c_date, c_retl,
                                        c_grcy, c_wrk, c_resi})) {
      res.warnings.push_back(path + ":" + std::to_string(lineno) +
                             ": short row skipped");
      continue;
    }
    std::string pref = detail::trim(cells[c_sub1]);
    if (pref.empty()) continue;                      // country-level row
    if (!detail::trim(cells[c_sub2]).empty()) continue;  // city-level row
    auto members = member_of.find(pref);
    if (members == member_of.end()) {
      unmapped.insert(pref);
      continue;
    }
    auto date = detail::parse_layout_date(detail::trim(cells[c_date]), "iso");
    if (!date) {
      res.warnings.push_back(path + ":" + std::to_string(lineno) +
                             ": unparseable date skipped");
      continue;
    }
    auto resi = detail::parse_number(cells[c_resi]);
    auto wrk = detail::parse_number(cells[c_wrk]);
    auto retl = detail::parse_number(cells[c_retl]);
    auto grcy = detail::parse_number(cells[c_grcy]);
    if (!resi || !wrk || !retl || !grcy) {
      ++res.skipped_rows;  // partially reported day for this prefecture
      continue;
    }
    for (auto [area_idx, weight] : members->second) {
      Cell& c = agg[{area_idx, *date}];
      c.wsum += weight;
      c.resi += weight * *resi;
      c.wrk += weight * *wrk;
      c.retl += weight * *retl;
      c.grcy += weight * *grcy;
    }
  }
  for (const auto& p : unmapped) {
    res.warnings.push_back("unmapped sub-region '" + p + "'");
  }
  for (const auto& [key, c] : agg) {
    MobilityRecord r;
    r.area_id = region_map.areas[key.first].first;
    r.date = key.second;
    r.residential = c.resi / c.wsum;
    r.workplaces = c.wrk / c.wsum;
    r.retail_recreation = c.retl / c.wsum;
    r.grocery_pharmacy = c.grcy / c.wsum;
    res.records.push_back(std::move(r));
  }
  std::sort(res.records.begin(), res.records.end(),
            [](const MobilityRecord& a, const MobilityRecord& b) {
              if (a.area_id != b.area_id) return a.area_id < b.area_id;
              return a.date < b.date;
            });
  return res;
}

inline std::map<std::string, std::map<Date, MobilityPoint>>
mobility_by_area(const std::vector<MobilityRecord>& records) {
  std::map<std::string, std::map<Date, MobilityPoint>> out;
  for (const auto& r : records) {
    out[r.area_id][r.date] = {r.residential, r.workplaces,
                              r.retail_recreation, r.grocery_pharmacy};
  }
  return out;
}

/// Monthly voltage-class CSV: month (YYYY-MM), class, demand.
inline std::vector<VoltageClassRecord> parse_voltage(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open voltage file " + path);
  std::vector<VoltageClassRecord> out;
  std::set<std::tuple<int, int, VoltageClass>> seen;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.size() >= 3 &&
        line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (lineno == 1 && t.rfind("month", 0) == 0) continue;  // header
    std::vector<std::string> cells = detail::split_csv_line(t);
    if (cells.size() != 3) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected month,class,demand");
    }
    VoltageClassRecord r;
    if (std::sscanf(cells[0].c_str(), "%4d-%2d", &r.year, &r.month) != 2 ||
        r.month < 1 || r.month > 12) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": bad month '" + cells[0] + "'");
    }
    r.voltage_class = voltage_class_from(detail::trim(cells[1]));
    auto v = detail::parse_number(cells[2]);
    if (!v) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": bad demand '" + cells[2] + "'");
    }
    r.demand = *v;
    if (!seen.insert({r.year, r.month, r.voltage_class}).second) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": duplicate (month, class) entry");
    }
    out.push_back(r);
  }
  return out;
}

/// Year-over-year monthly change table per voltage class (the decomposition
/// view); months without a prior-year counterpart emit an empty change cell.
inline void write_voltage_yoy_csv(const std::vector<VoltageClassRecord>& recs,
                                  std::ostream& out) {
  std::map<std::tuple<int, int, VoltageClass>, double> by_key;
  for (const auto& r : recs) {
    by_key[{r.year, r.month, r.voltage_class}] = r.demand;
  }
  out << "month,voltage_class,demand,yoy_percent\n";
  for (const auto& [key, demand] : by_key) {
    auto [year, month, cls] = key;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    out << buf << ',' << to_string(cls) << ',';
    char dbuf[32];
    std::snprintf(dbuf, sizeof dbuf, "%.17g", demand);
    out << dbuf << ',';
    auto prior = by_key.find({year - 1, month, cls});
    if (prior != by_key.end() && prior->second != 0.0) {
      std::snprintf(dbuf, sizeof dbuf, "%.17g",
                    100.0 * (demand / prior->second - 1.0));
      out << dbuf;
    }
    out << '\n';
  }
}

}  // namespace eventimpact
