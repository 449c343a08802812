#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "eventimpact/errors.hpp"
#include "eventimpact/hash.hpp"
#include "eventimpact/kalman.hpp"
#include "eventimpact/mathutil.hpp"
#include "eventimpact/model.hpp"
#include "eventimpact/rng.hpp"

namespace eventimpact {

/// One joint draw from p(alpha | y, theta) by the mean-correction method:
/// simulate (alpha+, y+) from the model, smooth y - y+ under a zero initial
/// mean, and add the smoothed means back onto the simulated path. No
/// backward sampling pass and no covariance square roots are needed, which
/// keeps the pinned (zero-variance) regression state exact.
inline Eigen::MatrixXd simulation_smoother(
    const StateSpace& ss, const Eigen::VectorXd& y, double obs_var,
    const Eigen::VectorXd& state_noise_var,
    const Eigen::VectorXd& regression_mean, Rng& rng) {
  const long m = ss.dim();
  const long n = y.size();
  const long j = ss.n_noise();
  const Eigen::MatrixXd& T = ss.transition;
  const double obs_sd = std::sqrt(obs_var);
  Eigen::VectorXd noise_sd = state_noise_var.cwiseSqrt();
  Eigen::VectorXd init_sd = ss.init_var_diag.cwiseSqrt();

  // Forward-simulate a synthetic path and observations. The RNG is consumed
  // in a fixed order (initial state, then per step: one observation normal,
  // then the system disturbances) so runs are reproducible.
  Eigen::MatrixXd alpha_plus(m, n);
  Eigen::VectorXd ystar(n);
  Eigen::VectorXd a(m);
  for (long i = 0; i < m; ++i) a(i) = ss.init_mean(i) + init_sd(i) * rng.normal();
  for (long t = 0; t < n; ++t) {
    alpha_plus.col(t) = a;
    Eigen::VectorXd z = ss.design_at(
        ss.regression_state >= 0 ? regression_mean(t) : 0.0);
    double yplus = z.dot(a) + obs_sd * rng.normal();
    ystar(t) = is_missing(y(t)) ? std::numeric_limits<double>::quiet_NaN()
                                : y(t) - yplus;
    if (t + 1 < n) {
      Eigen::VectorXd eta(j);
      for (long k = 0; k < j; ++k) eta(k) = noise_sd(k) * rng.normal();
      a = T * a + ss.selection * eta;
    }
  }

  Eigen::VectorXd zero_mean = Eigen::VectorXd::Zero(m);
  KalmanResult kf = kalman_filter(ss, ystar, obs_var, state_noise_var,
                                  regression_mean, &zero_mean);
  SmoothResult sm = kalman_smoother(ss, kf, regression_mean);
  return alpha_plus + sm.mean;
}

struct GibbsOptions {
  bool keep_state_paths = false;  // full alpha paths are bulky; opt in
};

/// Posterior draws live on the internal standardized scale; the transform
/// fields map results back to the data's units (y = y_mean + y_sd * y_std,
/// covariate k standardized as (x - x_mean[k]) / x_sd[k]).
struct PosteriorDraws {
  ModelSpec spec;
  std::vector<std::string> noise_names;
  std::uint64_t seed = 0;
  long n_total = 0;   // Gibbs iterations including burn-in
  long n_burn = 0;
  long n_train = 0;   // training series length (incl. missing slots)
  long n_observed = 0;

  double y_mean = 0.0, y_sd = 1.0;
  Eigen::VectorXd x_mean, x_sd;

  Eigen::VectorXd obs_var;     // retained draws
  Eigen::MatrixXd state_var;   // retained x n_noise
  Eigen::MatrixXd beta;        // retained x K (0 cols without regression)
  Eigen::MatrixXd final_state; // retained x m, alpha_n per draw
  std::vector<Eigen::MatrixXd> state_paths;  // only with keep_state_paths

  Eigen::VectorXd rhat;        // split-chain PSR: obs_var then each state var

  long n_retained() const { return obs_var.size(); }
  long state_dim() const { return final_state.cols(); }
  long n_covariates() const { return beta.cols(); }
};

namespace detail {

inline const GammaPrior& prior_for(const Priors& p, const std::string& name) {
  if (name == "level") return p.level_precision;
  if (name == "slope") return p.slope_precision;
  if (name == "seasonal") return p.seasonal_precision;
  throw NumericError("no prior mapped for disturbance '" + name + "'");
}

/// Split-chain potential scale reduction on one parameter's retained chain.
inline double split_rhat(const Eigen::VectorXd& chain) {
  long n = chain.size() / 2;
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  auto half = [&](long off) {
    return chain.segment(off, n);
  };
  double m1 = half(0).mean();
  double m2 = half(chain.size() - n).mean();
  double v1 = (half(0).array() - m1).square().sum() / double(n - 1);
  double v2 = (half(chain.size() - n).array() - m2).square().sum() / double(n - 1);
  double w = 0.5 * (v1 + v2);
  if (!(w > 0.0)) return 1.0;  // exactly constant chain halves
  double grand = 0.5 * (m1 + m2);
  double b = double(n) * ((m1 - grand) * (m1 - grand) +
                          (m2 - grand) * (m2 - grand));  // over m-1 = 1 chains
  double var_plus = (double(n - 1) / double(n)) * w + b / double(n);
  return std::sqrt(var_plus / w);
}

inline double standardized_variance_draw(Rng& rng, const GammaPrior& prior,
                                         double sum_sq, long count,
                                         const char* what) {
  double shape = prior.shape + 0.5 * double(count);
  double rate = prior.rate + 0.5 * sum_sq;
  double precision = rng.gamma(shape, rate);
  double var = 1.0 / precision;
  // Floors/ceilings are stated against var(y_pre); the sampler runs on the
  // standardized scale where that variance is 1.
  if (var > 1e6) {
    throw NumericError(std::string("sampled ") + what +
                       " variance diverged (exceeds 1e6 x var(y))");
  }
  return std::max(var, 1e-12);
}

}  // namespace detail

/// Gibbs sampler over (alpha, state variances, observation variance, beta).
/// n_draws counts total iterations; the first n_burn are discarded. Fully
/// deterministic given the seed.
inline PosteriorDraws gibbs_fit(const ModelSpec& spec_in,
                                const Eigen::VectorXd& y,
                                const Priors& priors, long n_draws,
                                long n_burn, std::uint64_t seed,
                                const GibbsOptions& opts = {}) {
  const long n = y.size();
  spec_in.validate(n);
  if (n_draws < 1 || n_burn < 0 || n_burn >= n_draws) {
    throw ConfigError("need 0 <= n_burn < n_draws");
  }
  if (!(priors.obs_precision.shape > 0) || !(priors.obs_precision.rate > 0)) {
    throw ConfigError("observation precision prior must be proper");
  }

  // Standardize y over its observed entries.
  std::vector<double> observed;
  observed.reserve(n);
  for (long t = 0; t < n; ++t) {
    if (!is_missing(y(t))) observed.push_back(y(t));
  }
  const long n_obs = long(observed.size());
  double ymean = mean(observed);
  double ysd = n_obs >= 2 ? sample_sd(observed) : 0.0;
  if (!(ysd > 0.0)) {
    throw DataError("training series is constant or too short to scale");
  }
  Eigen::VectorXd ystd(n);
  for (long t = 0; t < n; ++t) {
    ystd(t) = is_missing(y(t)) ? std::numeric_limits<double>::quiet_NaN()
                               : (y(t) - ymean) / ysd;
  }

  // Standardize covariate columns; a constant column is centered only.
  ModelSpec spec = spec_in;
  long K = 0;
  Eigen::VectorXd x_mean, x_sd;
  Eigen::MatrixXd X;
  if (spec.regression) {
    X = *spec.regression;
    K = X.cols();
    x_mean.resize(K);
    x_sd.resize(K);
    for (long k = 0; k < K; ++k) {
      x_mean(k) = X.col(k).mean();
      double sd = std::sqrt((X.col(k).array() - x_mean(k)).square().sum() /
                            double(std::max<long>(X.rows() - 1, 1)));
      x_sd(k) = sd > 0.0 ? sd : 1.0;
      X.col(k) = (X.col(k).array() - x_mean(k)) / x_sd(k);
    }
  }

  StateSpace ss = assemble(spec);
  const long m = ss.dim();
  if (n_obs < 3 * m) {
    throw DataError("training series has " + std::to_string(n_obs) +
                    " observed points; need at least 3 x state dimension = " +
                    std::to_string(3 * m));
  }
  const long J = ss.n_noise();
  const Eigen::MatrixXd& T = ss.transition;

  // Disturbance j loads on exactly one state row in this construction.
  std::vector<long> noise_row(J);
  for (long jcol = 0; jcol < J; ++jcol) {
    long row = -1;
    for (long i = 0; i < m; ++i) {
      if (ss.selection(i, jcol) != 0.0) {
        row = i;
        break;
      }
    }
    noise_row[jcol] = row;
  }

  Rng rng(seed);
  // Initialize variances at the prior guesses (rate/shape restores the
  // squared sd the prior was built from) and beta at zero.
  double h = priors.obs_precision.rate / priors.obs_precision.shape;
  Eigen::VectorXd q(J);
  for (long jcol = 0; jcol < J; ++jcol) {
    const GammaPrior& pr = detail::prior_for(priors, ss.noise_names[jcol]);
    if (!(pr.shape > 0) || !(pr.rate > 0)) {
      throw ConfigError("state precision prior must be proper");
    }
    q(jcol) = pr.rate / pr.shape;
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(K);

  const long retained = n_draws - n_burn;
  PosteriorDraws out;
  out.spec = spec_in;
  out.noise_names = ss.noise_names;
  out.seed = seed;
  out.n_total = n_draws;
  out.n_burn = n_burn;
  out.n_train = n;
  out.n_observed = n_obs;
  out.y_mean = ymean;
  out.y_sd = ysd;
  out.x_mean = x_mean;
  out.x_sd = x_sd;
  out.obs_var.resize(retained);
  out.state_var.resize(retained, J);
  out.beta.resize(retained, K);
  out.final_state.resize(retained, m);
  if (opts.keep_state_paths) out.state_paths.reserve(retained);

  Eigen::VectorXd reg_mean;
  for (long iter = 0; iter < n_draws; ++iter) {
    if (K > 0) reg_mean = X * beta;
    Eigen::MatrixXd alpha =
        simulation_smoother(ss, ystd, h, q, reg_mean, rng);

    for (long jcol = 0; jcol < J; ++jcol) {
      double ssq = 0.0;
      long row = noise_row[jcol];
      for (long t = 0; t + 1 < n; ++t) {
        double eta = alpha(row, t + 1) - T.row(row).dot(alpha.col(t));
        ssq += eta * eta;
      }
      q(jcol) = detail::standardized_variance_draw(
          rng, detail::prior_for(priors, ss.noise_names[jcol]), ssq, n - 1,
          ss.noise_names[jcol].c_str());
    }

    double ssq_obs = 0.0;
    for (long t = 0; t < n; ++t) {
      if (is_missing(ystd(t))) continue;
      Eigen::VectorXd z = ss.design_at(K > 0 ? reg_mean(t) : 0.0);
      double e = ystd(t) - z.dot(alpha.col(t));
      ssq_obs += e * e;
    }
    h = detail::standardized_variance_draw(rng, priors.obs_precision, ssq_obs,
                                           n_obs, "observation");

    if (K > 0) {
      // Target for the regression step: y with the state contribution
      // removed (design evaluated at a zero regression mean).
      Eigen::VectorXd z0 = ss.design_at(0.0);
      Eigen::MatrixXd XtX = Eigen::MatrixXd::Zero(K, K);
      Eigen::VectorXd Xtr = Eigen::VectorXd::Zero(K);
      for (long t = 0; t < n; ++t) {
        if (is_missing(ystd(t))) continue;
        double r = ystd(t) - z0.dot(alpha.col(t));
        XtX.noalias() += X.row(t).transpose() * X.row(t);
        Xtr.noalias() += X.row(t).transpose() * r;
      }
      Eigen::MatrixXd precision =
          XtX / h + priors.beta_prior_precision *
                        Eigen::MatrixXd::Identity(K, K);
      Eigen::LLT<Eigen::MatrixXd> llt(precision);
      if (llt.info() != Eigen::Success) {
        throw NumericError("regression posterior precision not positive "
                           "definite");
      }
      Eigen::VectorXd mu = llt.solve(Xtr / h);
      Eigen::VectorXd zdraw(K);
      for (long k = 0; k < K; ++k) zdraw(k) = rng.normal();
      beta = mu + llt.matrixU().solve(zdraw);
    }

    if (iter >= n_burn) {
      long r = iter - n_burn;
      out.obs_var(r) = h;
      out.state_var.row(r) = q.transpose();
      out.beta.row(r) = beta.transpose();
      out.final_state.row(r) = alpha.col(n - 1).transpose();
      if (opts.keep_state_paths) out.state_paths.push_back(alpha);
    }
  }

  out.rhat.resize(1 + J);
  out.rhat(0) = detail::split_rhat(out.obs_var);
  for (long jcol = 0; jcol < J; ++jcol) {
    out.rhat(1 + jcol) = detail::split_rhat(out.state_var.col(jcol));
  }
  return out;
}

/// Canonical one-line description of a model spec; its FNV-1a hash goes in
/// the draws-file header so downstream stages can detect spec mismatches.
inline std::string spec_signature(const ModelSpec& spec) {
  std::ostringstream os;
  os << "level=" << spec.level << ";trend=" << spec.trend
     << ";seasonal=" << spec.seasonal_period
     << ";covariates=" << (spec.regression ? spec.regression->cols() : 0);
  return os.str();
}

namespace detail {
inline void fmt_g17(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}
}  // namespace detail

/// Columnar serialization: '#'-prefixed header lines carry provenance and
/// the back-transform, then one CSV row per retained draw. %.17g columns
/// round-trip doubles exactly, so re-serialization is byte-stable.
inline void write_draws(const PosteriorDraws& d, std::ostream& out) {
  const long J = d.state_var.cols();
  const long K = d.beta.cols();
  const long m = d.final_state.cols();
  out << "# eventimpact-draws v1\n";
  out << "# spec: " << spec_signature(d.spec) << "\n";
  out << "# spec_hash: " << hash_hex(fnv1a64(spec_signature(d.spec))) << "\n";
  out << "# seed: " << d.seed << "\n";
  out << "# iterations: " << d.n_total << "\n";
  out << "# burn_in: " << d.n_burn << "\n";
  out << "# n_train: " << d.n_train << "\n";
  out << "# n_observed: " << d.n_observed << "\n";
  auto num_line = [&](const char* key, double v) {
    out << "# " << key << ": ";
    detail::fmt_g17(out, v);
    out << "\n";
  };
  num_line("y_mean", d.y_mean);
  num_line("y_sd", d.y_sd);
  for (long k = 0; k < K; ++k) {
    out << "# x" << (k + 1) << "_transform: mean=";
    detail::fmt_g17(out, d.x_mean(k));
    out << " sd=";
    detail::fmt_g17(out, d.x_sd(k));
    out << "\n";
  }
  out << "# rhat:";
  for (long i = 0; i < d.rhat.size(); ++i) {
    out << ' ';
    detail::fmt_g17(out, d.rhat(i));
  }
  out << "\n";
  out << "# scale: standardized (apply y_mean/y_sd to recover data units)\n";

  out << "obs_var";
  for (long jcol = 0; jcol < J; ++jcol) out << ",var_" << d.noise_names[jcol];
  for (long k = 0; k < K; ++k) out << ",beta_" << (k + 1);
  for (long i = 0; i < m; ++i) out << ",final_state_" << (i + 1);
  out << "\n";
  for (long r = 0; r < d.n_retained(); ++r) {
    detail::fmt_g17(out, d.obs_var(r));
    for (long jcol = 0; jcol < J; ++jcol) {
      out << ',';
      detail::fmt_g17(out, d.state_var(r, jcol));
    }
    for (long k = 0; k < K; ++k) {
      out << ',';
      detail::fmt_g17(out, d.beta(r, k));
    }
    for (long i = 0; i < m; ++i) {
      out << ',';
      detail::fmt_g17(out, d.final_state(r, i));
    }
    out << "\n";
  }
}

/// Rebuilds PosteriorDraws from its serialized form. The model spec is
/// reconstructed from the signature line (the training design itself is not
/// persisted; prediction only needs the component layout and transforms).
inline PosteriorDraws read_draws(std::istream& in, const std::string& origin) {
  PosteriorDraws d;
  std::string line;
  bool saw_magic = false;
  std::vector<std::pair<double, double>> xforms;
  long spec_covariates = 0;
  auto fail = [&](const std::string& why) -> void {
    throw DataError(origin + ": " + why);
  };

  // Header block.
  std::string header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# ", 0) != 0) {
      header = line;
      break;
    }
    std::string body = line.substr(2);
    auto colon = body.find(": ");
    if (body == "eventimpact-draws v1") {
      saw_magic = true;
      continue;
    }
    if (colon == std::string::npos) continue;
    std::string key = body.substr(0, colon);
    std::string val = body.substr(colon + 2);
    if (key == "seed") d.seed = std::stoull(val);
    else if (key == "iterations") d.n_total = std::stol(val);
    else if (key == "burn_in") d.n_burn = std::stol(val);
    else if (key == "n_train") d.n_train = std::stol(val);
    else if (key == "n_observed") d.n_observed = std::stol(val);
    else if (key == "y_mean") d.y_mean = std::stod(val);
    else if (key == "y_sd") d.y_sd = std::stod(val);
    else if (key == "spec") {
      ModelSpec sp;
      std::istringstream ss(val);
      std::string tok;
      while (std::getline(ss, tok, ';')) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string k = tok.substr(0, eq);
        std::string v = tok.substr(eq + 1);
        if (k == "level") sp.level = (v == "1");
        else if (k == "trend") sp.trend = (v == "1");
        else if (k == "seasonal") sp.seasonal_period = std::stoi(v);
        else if (k == "covariates") spec_covariates = std::stol(v);
      }
      d.spec = sp;
    } else if (key == "rhat") {
      std::vector<double> vals;
      std::istringstream rs(val);
      std::string tok;
      while (std::getline(rs, tok, ' ')) {
        if (!tok.empty()) vals.push_back(std::stod(tok));
      }
      d.rhat.resize(long(vals.size()));
      for (std::size_t i = 0; i < vals.size(); ++i) d.rhat(long(i)) = vals[i];
    } else if (key.size() > 1 && key[0] == 'x' &&
               key.find("_transform") != std::string::npos) {
      double mv = 0, sv = 1;
      if (std::sscanf(val.c_str(), "mean=%lf sd=%lf", &mv, &sv) != 2) {
        fail("bad covariate transform line: " + line);
      }
      xforms.emplace_back(mv, sv);
    }
  }
  if (!saw_magic) fail("not a draws file (missing magic header)");
  if (header.empty()) fail("missing column header");
  if (long(xforms.size()) != spec_covariates) {
    fail("covariate transform count disagrees with spec signature");
  }
  d.x_mean.resize(xforms.size());
  d.x_sd.resize(xforms.size());
  for (std::size_t k = 0; k < xforms.size(); ++k) {
    d.x_mean(k) = xforms[k].first;
    d.x_sd(k) = xforms[k].second;
  }
  if (spec_covariates > 0) {
    // Placeholder design: presence and width drive reassembly; rows unused.
    d.spec.regression = Eigen::MatrixXd::Zero(0, spec_covariates);
  }

  // Column layout from the header.
  std::vector<std::string> cols;
  {
    std::istringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  if (cols.empty() || cols[0] != "obs_var") fail("unexpected column header");
  long J = 0, K = 0, m = 0;
  for (const auto& c : cols) {
    if (c.rfind("var_", 0) == 0) {
      d.noise_names.push_back(c.substr(4));
      ++J;
    } else if (c.rfind("beta_", 0) == 0) {
      ++K;
    } else if (c.rfind("final_state_", 0) == 0) {
      ++m;
    }
  }
  if (K != spec_covariates) fail("beta column count disagrees with spec");

  std::vector<std::vector<double>> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(cols.size());
    std::istringstream rs(line);
    std::string cell;
    while (std::getline(rs, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != cols.size()) {
      fail("row " + std::to_string(lineno) + " has " +
           std::to_string(row.size()) + " cells, expected " +
           std::to_string(cols.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail("no draw rows");

  const long R = long(rows.size());
  d.obs_var.resize(R);
  d.state_var.resize(R, J);
  d.beta.resize(R, K);
  d.final_state.resize(R, m);
  for (long r = 0; r < R; ++r) {
    long c = 0;
    d.obs_var(r) = rows[r][c++];
    for (long jcol = 0; jcol < J; ++jcol) d.state_var(r, jcol) = rows[r][c++];
    for (long k = 0; k < K; ++k) d.beta(r, k) = rows[r][c++];
    for (long i = 0; i < m; ++i) d.final_state(r, i) = rows[r][c++];
  }
  return d;
}

}  // namespace eventimpact
