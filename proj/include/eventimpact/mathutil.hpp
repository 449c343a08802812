#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "eventimpact/errors.hpp"

namespace eventimpact {

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

/// Unbiased sample variance (n-1 denominator).
inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

inline double sample_sd(std::span<const double> v) {
  return std::sqrt(sample_variance(v));
}

/// Quantile by linear interpolation between order statistics (the R type-7
/// convention): h = (n-1)p, interpolate between floor(h) and floor(h)+1.
/// Input must be sorted ascending.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw NumericError("quantile of empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  double h = double(sorted.size() - 1) * p;
  std::size_t lo = std::size_t(h);
  double frac = h - double(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Copies, sorts, and takes the type-7 quantile.
inline double quantile(std::span<const double> v, double p) {
  std::vector<double> tmp(v.begin(), v.end());
  std::sort(tmp.begin(), tmp.end());
  return quantile_sorted(tmp, p);
}

inline double median(std::span<const double> v) { return quantile(v, 0.5); }

}  // namespace eventimpact
