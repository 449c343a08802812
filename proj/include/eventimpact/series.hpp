#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eventimpact/date.hpp"
#include "eventimpact/errors.hpp"

namespace eventimpact {

/// One area's daily demand series. Values stay in the unit of the source
/// file; the unit travels as opaque metadata and is never converted.
class DailySeries {
 public:
  struct Observation {
    Date date;
    double value;
  };

  DailySeries() = default;
  DailySeries(std::string area_id, std::string unit)
      : area_id_(std::move(area_id)), unit_(std::move(unit)) {}

  const std::string& area_id() const { return area_id_; }
  const std::string& unit() const { return unit_; }
  const std::vector<Observation>& observations() const { return obs_; }
  std::size_t size() const { return obs_.size(); }
  bool empty() const { return obs_.empty(); }

  /// Appends in date order. Throws DataError on out-of-order or duplicate
  /// dates; use validate_series for non-throwing inspection of foreign data.
  void append(const Date& d, double value) {
    if (!obs_.empty() && !(obs_.back().date < d)) {
      throw DataError("series " + area_id_ + ": date " + d.to_string() +
                      " not after " + obs_.back().date.to_string());
    }
    obs_.push_back({d, value});
  }

  std::optional<double> value_at(const Date& d) const {
    auto it = std::lower_bound(
        obs_.begin(), obs_.end(), d,
        [](const Observation& o, const Date& q) { return o.date < q; });
    if (it != obs_.end() && it->date == d) return it->value;
    return std::nullopt;
  }

  Date first_date() const { return obs_.front().date; }
  Date last_date() const { return obs_.back().date; }

 private:
  std::string area_id_;
  std::string unit_;
  std::vector<Observation> obs_;
};

struct SeriesViolation {
  Date date;
  std::string message;
};

/// Reports every invariant violation (never aborts): non-increasing or
/// duplicate dates, non-finite values, non-positive values.
inline std::vector<SeriesViolation> validate_series(const DailySeries& s) {
  std::vector<SeriesViolation> out;
  const auto& obs = s.observations();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    if (i > 0) {
      if (obs[i - 1].date == o.date) {
        out.push_back({o.date, "duplicate date"});
      } else if (o.date < obs[i - 1].date) {
        out.push_back({o.date, "dates not strictly increasing"});
      }
    }
    if (!std::isfinite(o.value)) {
      out.push_back({o.date, "non-finite value"});
    } else if (o.value <= 0.0) {
      out.push_back({o.date, "non-positive demand value"});
    }
  }
  return out;
}

/// Canonical interchange CSV: header `area_id,date,demand,unit`, one row per
/// (area, day). Values print with 17 significant digits so a write/read
/// round trip is bit exact.
inline void write_canonical_csv(const std::vector<DailySeries>& series,
                                std::ostream& out) {
  out << "area_id,date,demand,unit\n";
  char buf[40];
  for (const auto& s : series) {
    for (const auto& o : s.observations()) {
      std::snprintf(buf, sizeof(buf), "%.17g", o.value);
      out << s.area_id() << ',' << o.date.to_string() << ',' << buf << ','
          << s.unit() << '\n';
    }
  }
}

inline void write_canonical_csv(const std::vector<DailySeries>& series,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_canonical_csv(series, out);
}

inline std::vector<DailySeries> read_canonical_csv(std::istream& in,
                                                   const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": empty file");
  // tolerate a UTF-8 BOM and trailing CR
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
    line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "area_id,date,demand,unit") {
    throw DataError(origin + ": unexpected header '" + line + "'");
  }
  std::map<std::string, DailySeries> by_area;
  std::vector<std::string> order;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string cells[4];
    std::size_t pos = 0;
    for (int c = 0; c < 4; ++c) {
      auto comma = line.find(',', pos);
      if (c < 3 && comma == std::string::npos) {
        throw DataError(origin + ":" + std::to_string(lineno) +
                        ": expected 4 fields");
      }
      cells[c] = line.substr(pos, comma == std::string::npos
                                      ? std::string::npos
                                      : comma - pos);
      pos = comma + 1;
    }
    auto it = by_area.find(cells[0]);
    if (it == by_area.end()) {
      it = by_area.emplace(cells[0], DailySeries(cells[0], cells[3])).first;
      order.push_back(cells[0]);
    }
    try {
      it->second.append(Date::parse(cells[1]), std::stod(cells[2]));
    } catch (const std::exception& e) {
      throw DataError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::vector<DailySeries> out;
  out.reserve(order.size());
  for (const auto& a : order) out.push_back(std::move(by_area.at(a)));
  return out;
}

inline std::vector<DailySeries> read_canonical_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_canonical_csv(in, path);
}

}  // namespace eventimpact
