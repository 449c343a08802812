#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "eventimpact/date.hpp"
#include "eventimpact/errors.hpp"
#include "eventimpact/windows.hpp"

namespace eventimpact {

/// One (area, day) row of the partial-adjustment panel: log change rates of
/// demand against its counterfactual and of the four mobility categories,
/// plus the within-area lags of the demand term (lag 2 is the instrument).
struct PanelObservation {
  std::string area_id;
  Date date;
  double ln_ele = 0.0;
  double ln_resi = 0.0;
  double ln_wrk = 0.0;
  double ln_retl = 0.0;
  double ln_grcy = 0.0;
  double ln_ele_lag1 = 0.0;
  double ln_ele_lag2 = 0.0;
};

struct MobilityPoint {
  double residential = 0.0;       // percent change from baseline
  double workplaces = 0.0;
  double retail_recreation = 0.0;
  double grocery_pharmacy = 0.0;
};

struct PanelBuildInfo {
  long n_join_days = 0;   // (area, date) pairs surviving the inner join
  long n_gaps = 0;        // lag pairs spanning more than a weekend
  std::map<std::string, long> obs_per_area;
};

namespace detail {
inline double ln_change(double percent, const std::string& what,
                        const std::string& area, const Date& d) {
  double ratio = 1.0 + percent / 100.0;
  if (!(ratio > 0.0)) {
    throw DataError(what + " change of " + std::to_string(percent) +
                    "% at " + area + " " + d.to_string() +
                    " has no logarithm");
  }
  return std::log(ratio);
}
}  // namespace detail

/// Inner-joins per-area demand log-ratios with mobility on (area, date)
/// within the period, then forms lags over each area's retained dates in
/// chronological order; the first two retained dates per area drop out.
/// Mobility percentages are converted to log change rates ln(1 + pct/100).
/// Gaps between adjacent retained dates wider than a weekend are counted in
/// the build info, per the documented lag-over-retained-dates rule.
inline std::vector<PanelObservation> build_panel(
    const std::map<std::string, std::vector<std::pair<Date, double>>>&
        ln_ele_by_area,
    const std::map<std::string, std::map<Date, MobilityPoint>>& mobility,
    const PeriodSpec& period, PanelBuildInfo* info = nullptr) {
  std::vector<PanelObservation> out;
  PanelBuildInfo local;
  for (const auto& [area, series] : ln_ele_by_area) {
    auto mob_it = mobility.find(area);
    if (mob_it == mobility.end()) continue;
    std::vector<PanelObservation> rows;
    for (const auto& [d, ln_ele] : series) {
      if (!period.contains(d)) continue;
      auto mp = mob_it->second.find(d);
      if (mp == mob_it->second.end()) continue;
      PanelObservation o;
      o.area_id = area;
      o.date = d;
      o.ln_ele = ln_ele;
      o.ln_resi = detail::ln_change(mp->second.residential, "residential",
                                    area, d);
      o.ln_wrk = detail::ln_change(mp->second.workplaces, "workplaces", area,
                                   d);
      o.ln_retl = detail::ln_change(mp->second.retail_recreation,
                                    "retail_recreation", area, d);
      o.ln_grcy = detail::ln_change(mp->second.grocery_pharmacy,
                                    "grocery_pharmacy", area, d);
      rows.push_back(o);
    }
    std::sort(rows.begin(), rows.end(),
              [](const PanelObservation& a, const PanelObservation& b) {
                return a.date < b.date;
              });
    local.n_join_days += long(rows.size());
    for (std::size_t i = 2; i < rows.size(); ++i) {
      PanelObservation o = rows[i];
      o.ln_ele_lag1 = rows[i - 1].ln_ele;
      o.ln_ele_lag2 = rows[i - 2].ln_ele;
      if (rows[i - 1].date.days_until(o.date) > 3 ||
          rows[i - 2].date.days_until(rows[i - 1].date) > 3) {
        ++local.n_gaps;
      }
      out.push_back(std::move(o));
      ++local.obs_per_area[area];
    }
  }
  if (out.empty()) {
    throw DataError("empty panel for period '" + period.label +
                    "': no area yields three or more joined observations");
  }
  if (info) *info = local;
  return out;
}

struct GmmFit {
  std::vector<std::string> names;  // intercept first
  Eigen::VectorXd coef;
  Eigen::VectorXd se;              // cluster-robust by area
  Eigen::VectorXd z;
  std::vector<bool> significant;   // |z| > 1.96
  long n_obs = 0;
  long n_clusters = 0;
  std::vector<std::string> instruments;
  double first_stage_F = 0.0;
  bool weak_instruments = false;
};

namespace detail {

inline void check_full_rank(const Eigen::MatrixXd& M,
                            const std::vector<std::string>& names,
                            const char* what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  qr.setThreshold(1e-10);
  if (qr.rank() == M.cols()) return;
  // The pivot permutation orders independent columns first; the trailing
  // ones are the (nearly) collinear offenders.
  std::string offenders;
  Eigen::VectorXi perm = qr.colsPermutation().indices();
  for (long i = qr.rank(); i < M.cols(); ++i) {
    if (!offenders.empty()) offenders += ", ";
    offenders += names[perm(i)];
  }
  throw NumericError(std::string(what) + " matrix is rank deficient; " +
                     "collinear columns: " + offenders);
}

}  // namespace detail

/// Two-step efficient GMM of ln_ele on {1, mobility terms, ln_ele_lag1}
/// instrumented by {1, mobility terms, ln_ele_lag2}, with
/// heteroskedasticity-robust second-step weighting and standard errors
/// clustered by area. Just-identified input reduces to the 2SLS closed
/// form. Observations are sorted internally by (area, date) so the fit is
/// invariant to input order, bit for bit.
inline GmmFit estimate(std::vector<PanelObservation> panel) {
  if (panel.empty()) throw DataError("cannot estimate on an empty panel");
  std::sort(panel.begin(), panel.end(),
            [](const PanelObservation& a, const PanelObservation& b) {
              if (a.area_id != b.area_id) return a.area_id < b.area_id;
              return a.date < b.date;
            });
  const long n = long(panel.size());
  const long k = 6;

  GmmFit fit;
  fit.names = {"intercept", "ln_resi", "ln_wrk",      "ln_retl",
               "ln_grcy",   "ln_ele_lag1"};
  fit.instruments = {"intercept", "ln_resi", "ln_wrk",
                     "ln_retl",   "ln_grcy", "ln_ele_lag2"};
  Eigen::MatrixXd X(n, k), Z(n, k);
  Eigen::VectorXd y(n);
  std::vector<std::string> cluster_of(n);
  for (long i = 0; i < n; ++i) {
    const PanelObservation& o = panel[i];
    for (double v : {o.ln_ele, o.ln_resi, o.ln_wrk, o.ln_retl, o.ln_grcy,
                     o.ln_ele_lag1, o.ln_ele_lag2}) {
      if (!std::isfinite(v)) {
        throw DataError("non-finite panel value at " + o.area_id + " " +
                        o.date.to_string());
      }
    }
    X.row(i) << 1.0, o.ln_resi, o.ln_wrk, o.ln_retl, o.ln_grcy, o.ln_ele_lag1;
    Z.row(i) << 1.0, o.ln_resi, o.ln_wrk, o.ln_retl, o.ln_grcy, o.ln_ele_lag2;
    y(i) = o.ln_ele;
    cluster_of[i] = o.area_id;
  }
  if (n <= k) {
    throw DataError("panel has " + std::to_string(n) +
                    " observations for " + std::to_string(k) +
                    " coefficients");
  }
  detail::check_full_rank(X, fit.names, "regressor");
  detail::check_full_rank(Z, fit.instruments, "instrument");

  auto solve_gmm = [&](const Eigen::MatrixXd& W) {
    Eigen::MatrixXd G = Z.transpose() * X / double(n);
    Eigen::VectorXd g = Z.transpose() * y / double(n);
    Eigen::MatrixXd GtW = G.transpose() * W;
    return Eigen::VectorXd((GtW * G).ldlt().solve(GtW * g));
  };

  // Step 1: 2SLS weighting (Z'Z)^-1; step 2: heteroskedasticity-robust
  // weighting from step-1 residuals.
  Eigen::MatrixXd W1 =
      (Z.transpose() * Z / double(n)).ldlt().solve(
          Eigen::MatrixXd::Identity(k, k));
  Eigen::VectorXd b1 = solve_gmm(W1);
  Eigen::VectorXd e1 = y - X * b1;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(k, k);
  for (long i = 0; i < n; ++i) {
    S.noalias() += Z.row(i).transpose() * Z.row(i) * (e1(i) * e1(i));
  }
  S /= double(n);
  Eigen::MatrixXd W2 = S.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::VectorXd b = solve_gmm(W2);
  Eigen::VectorXd e = y - X * b;

  // Cluster-robust sandwich by area with the usual small-sample factor.
  std::map<std::string, Eigen::VectorXd> phi;
  for (long i = 0; i < n; ++i) {
    auto [it, fresh] =
        phi.try_emplace(cluster_of[i], Eigen::VectorXd::Zero(k));
    it->second.noalias() += Z.row(i).transpose() * e(i);
  }
  const long n_clusters = long(phi.size());
  Eigen::MatrixXd Sc = Eigen::MatrixXd::Zero(k, k);
  for (const auto& [area, p] : phi) Sc.noalias() += p * p.transpose();
  Sc /= double(n);
  Eigen::MatrixXd G = Z.transpose() * X / double(n);
  Eigen::MatrixXd bread =
      (G.transpose() * W2 * G).ldlt().solve(G.transpose() * W2);
  Eigen::MatrixXd V = bread * Sc * bread.transpose() / double(n);
  if (n_clusters > 1 && n > k) {
    V *= (double(n_clusters) / double(n_clusters - 1)) *
         (double(n - 1) / double(n - k));
  }

  fit.coef = b;
  fit.se.resize(k);
  fit.z.resize(k);
  fit.significant.resize(k);
  for (long j = 0; j < k; ++j) {
    fit.se(j) = std::sqrt(std::max(V(j, j), 0.0));
    fit.z(j) = fit.se(j) > 0 ? b(j) / fit.se(j)
                             : std::numeric_limits<double>::quiet_NaN();
    fit.significant[j] = fit.se(j) > 0 && std::abs(fit.z(j)) > 1.96;
  }
  fit.n_obs = n;
  fit.n_clusters = n_clusters;

  // First-stage F for the excluded instrument: ln_ele_lag1 regressed on the
  // exogenous regressors plus ln_ele_lag2, F-testing the lag-2 coefficient.
  {
    Eigen::VectorXd d = X.col(k - 1);
    Eigen::MatrixXd Zu = Z;                  // unrestricted: includes lag2
    Eigen::MatrixXd Zr = Z.leftCols(k - 1);  // restricted: drops it
    auto rss = [&](const Eigen::MatrixXd& M) {
      Eigen::VectorXd c = (M.transpose() * M)
                              .ldlt()
                              .solve(M.transpose() * d);
      return (d - M * c).squaredNorm();
    };
    double rss_u = rss(Zu);
    double rss_r = rss(Zr);
    double df = double(n - k);
    fit.first_stage_F =
        rss_u > 0 ? std::max(0.0, (rss_r - rss_u) / (rss_u / df))
                  : std::numeric_limits<double>::infinity();
    fit.weak_instruments = fit.first_stage_F < 10.0;
  }
  return fit;
}

namespace detail {
inline std::string g17p(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// Coefficient table, one row per period: estimate and significance marker
/// per regressor plus diagnostics.
inline void write_gmm_csv(
    const std::vector<std::pair<std::string, GmmFit>>& fits,
    std::ostream& out) {
  if (fits.empty()) {
    out << "period\n";
    return;
  }
  const GmmFit& first = fits.front().second;
  out << "period";
  for (const auto& name : first.names) {
    out << ',' << name << ',' << name << "_se," << name << "_z," << name
        << "_sig";
  }
  out << ",n_obs,n_clusters,first_stage_F,weak_instruments\n";
  for (const auto& [label, f] : fits) {
    out << label;
    for (long j = 0; j < f.coef.size(); ++j) {
      out << ',' << detail::g17p(f.coef(j)) << ',' << detail::g17p(f.se(j))
          << ',' << detail::g17p(f.z(j)) << ','
          << (f.significant[j] ? "*" : "");
    }
    out << ',' << f.n_obs << ',' << f.n_clusters << ','
        << detail::g17p(f.first_stage_F) << ','
        << (f.weak_instruments ? "yes" : "no") << '\n';
  }
}

}  // namespace eventimpact
