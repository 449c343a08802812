#pragma once

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "eventimpact/errors.hpp"
#include "eventimpact/mathutil.hpp"

namespace eventimpact {

struct GroupedSample {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> groups;

  void validate() const {
    if (groups.size() < 2) {
      throw DataError("grouped sample needs at least two groups");
    }
    if (labels.size() != groups.size()) {
      throw DataError("group labels and value lists differ in count");
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i].size() < 2) {
        throw DataError("group '" + labels[i] + "' has fewer than two values");
      }
      for (double v : groups[i]) {
        if (!std::isfinite(v)) {
          throw DataError("group '" + labels[i] + "' contains a non-finite "
                          "value");
        }
      }
    }
  }
};

struct LeveneResult {
  double F = 0.0;
  long df_between = 0;
  long df_within = 0;
  double p = 1.0;
};

/// Levene's test with center = mean: a one-way ANOVA on the absolute
/// deviations of each value from its own group mean.
inline LeveneResult levene_mean(const GroupedSample& sample) {
  sample.validate();
  const std::size_t k = sample.groups.size();
  std::vector<std::vector<double>> dev(k);
  long N = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double m = mean(sample.groups[i]);
    dev[i].reserve(sample.groups[i].size());
    for (double v : sample.groups[i]) dev[i].push_back(std::abs(v - m));
    N += long(sample.groups[i].size());
  }
  double grand = 0.0;
  for (const auto& g : dev) {
    for (double v : g) grand += v;
  }
  grand /= double(N);
  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : dev) {
    double gm = mean(g);
    ssb += double(g.size()) * (gm - grand) * (gm - grand);
    for (double v : g) ssw += (v - gm) * (v - gm);
  }
  LeveneResult r;
  r.df_between = long(k) - 1;
  r.df_within = N - long(k);
  if (ssw == 0.0) {
    if (ssb == 0.0) {
      r.F = 0.0;
      r.p = 1.0;
      return r;
    }
    throw DataError("deviation variance is zero within every group; "
                    "Levene statistic is degenerate");
  }
  r.F = (ssb / double(r.df_between)) / (ssw / double(r.df_within));
  boost::math::fisher_f fdist(double(r.df_between), double(r.df_within));
  r.p = boost::math::cdf(boost::math::complement(fdist, r.F));
  return r;
}

namespace detail {

inline double std_normal_pdf(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865476);
}

/// Gauss-Legendre nodes/weights on [-1, 1], computed once per order by
/// Newton iteration on the Legendre polynomial.
struct GaussLegendre {
  std::vector<double> node, weight;
  explicit GaussLegendre(int order) {
    node.resize(order);
    weight.resize(order);
    const double eps = 1e-15;
    const double pi = 3.14159265358979323846;
    int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
      double x = std::cos(pi * (i + 0.75) / (order + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= order; ++j) {
          double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < eps) break;
      }
      node[i] = -x;
      node[order - 1 - i] = x;
      weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
      weight[order - 1 - i] = weight[i];
    }
  }
};

inline const GaussLegendre& gl_inner() {
  static const GaussLegendre g(128);
  return g;
}
inline const GaussLegendre& gl_outer() {
  static const GaussLegendre g(160);
  return g;
}

/// P(range of k standard normals <= w).
inline double normal_range_cdf(double w, int k) {
  if (w <= 0.0) return 0.0;
  const GaussLegendre& gl = gl_inner();
  const double a = -9.0, b = 9.0;
  const double mid = 0.5 * (a + b), halfw = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < gl.node.size(); ++i) {
    double z = mid + halfw * gl.node[i];
    double inner = std_normal_cdf(z + w) - std_normal_cdf(z);
    acc += gl.weight[i] * std_normal_pdf(z) *
           std::pow(inner, double(k - 1));
  }
  return std::min(1.0, double(k) * halfw * acc);
}

}  // namespace detail

/// CDF of the studentized range: Q = range(k normals) / S with
/// nu * S^2 ~ chi-squared(nu), integrated over the scale by mapping the
/// chi-squared probability integral onto Gauss-Legendre nodes.
inline double studentized_range_cdf(double q, int k, double nu) {
  if (k < 2) throw ConfigError("studentized range needs k >= 2 groups");
  if (!(nu > 0)) throw ConfigError("studentized range needs df > 0");
  if (q <= 0.0) return 0.0;
  boost::math::chi_squared chi(nu);
  const detail::GaussLegendre& gl = detail::gl_outer();
  double acc = 0.0;
  for (std::size_t i = 0; i < gl.node.size(); ++i) {
    double u = 0.5 * (gl.node[i] + 1.0);  // map to (0, 1)
    double s = std::sqrt(boost::math::quantile(chi, u) / nu);
    acc += 0.5 * gl.weight[i] * detail::normal_range_cdf(q * s, k);
  }
  return std::min(1.0, acc);
}

/// Quantile by bisection on the CDF; monotone, so plain bisection is exact
/// to the requested tolerance.
inline double studentized_range_quantile(double p, int k, double nu) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw ConfigError("studentized range quantile needs 0 < p < 1");
  }
  double lo = 0.0, hi = 1.0;
  while (studentized_range_cdf(hi, k, nu) < p) {
    hi *= 2.0;
    if (hi > 1e4) {
      throw NumericError("studentized range quantile did not bracket");
    }
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (hi - lo < 1e-12 * std::max(1.0, hi)) break;
    (studentized_range_cdf(mid, k, nu) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct TukeyRow {
  std::string group_a;   // first label in label order
  std::string group_b;   // second label
  double diff = 0.0;     // mean(group_b) - mean(group_a)
  double lower = 0.0;
  double upper = 0.0;
  double p_adj = 1.0;
};

/// Tukey HSD over all unordered label pairs; unequal group sizes use the
/// Tukey-Kramer half-width. Sign convention: diff = later label's mean
/// minus earlier label's mean, stated in the emitted metadata.
inline std::vector<TukeyRow> tukey_hsd(const GroupedSample& sample,
                                       double confidence = 0.95) {
  sample.validate();
  if (!(confidence > 0.0) || !(confidence < 1.0)) {
    throw ConfigError("confidence must lie in (0, 1)");
  }
  const std::size_t k = sample.groups.size();
  long N = 0;
  std::vector<double> means(k);
  double ssw = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    means[i] = mean(sample.groups[i]);
    for (double v : sample.groups[i]) {
      ssw += (v - means[i]) * (v - means[i]);
    }
    N += long(sample.groups[i].size());
  }
  const double df = double(N - long(k));
  const double mse = ssw / df;

  std::vector<TukeyRow> rows;
  if (mse == 0.0) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        if (means[i] != means[j]) {
          throw DataError("zero pooled variance with unequal means between '" +
                          sample.labels[i] + "' and '" + sample.labels[j] +
                          "'; Tukey statistic is infinite");
        }
        rows.push_back({sample.labels[i], sample.labels[j], 0.0, 0.0, 0.0,
                        1.0});
      }
    }
    return rows;
  }

  const double qcrit =
      studentized_range_quantile(confidence, int(k), df);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      double ni = double(sample.groups[i].size());
      double nj = double(sample.groups[j].size());
      double spread = std::sqrt(0.5 * mse * (1.0 / ni + 1.0 / nj));
      TukeyRow row;
      row.group_a = sample.labels[i];
      row.group_b = sample.labels[j];
      row.diff = means[j] - means[i];
      row.lower = row.diff - qcrit * spread;
      row.upper = row.diff + qcrit * spread;
      double q_obs = std::abs(row.diff) / spread;
      row.p_adj = 1.0 - studentized_range_cdf(q_obs, int(k), df);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace detail {
inline std::string g17s(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// Pairwise table mirroring the appendix layout; the sign convention header
/// line documents diff = mean(group_b) - mean(group_a).
inline void write_tukey_csv(const std::vector<TukeyRow>& rows,
                            std::ostream& out) {
  out << "# diff = mean(group_b) - mean(group_a), labels in input order\n";
  out << "group_a,group_b,diff,lwr,upr,p_adj\n";
  for (const auto& r : rows) {
    out << r.group_a << ',' << r.group_b << ',' << detail::g17s(r.diff) << ','
        << detail::g17s(r.lower) << ',' << detail::g17s(r.upper) << ','
        << detail::g17s(r.p_adj) << '\n';
  }
}

}  // namespace eventimpact
