#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "eventimpact/errors.hpp"

namespace eventimpact {

/// Gamma prior on a precision 1/sigma^2, parameterized by (shape, rate) so
/// the density is proportional to x^(shape-1) * exp(-rate * x).
struct GammaPrior {
  double shape = 0.0;
  double rate = 0.0;
};

/// Priors are stated on the standardized scale (the sampler centers and
/// scales y to unit variance before fitting, and covariates likewise), so
/// these defaults are meaningful regardless of the data's units.
struct Priors {
  GammaPrior obs_precision;
  GammaPrior level_precision;
  GammaPrior slope_precision;
  GammaPrior seasonal_precision;
  double beta_prior_precision = 0.0;  // N(0, 1/precision) per coefficient

  /// sigma_guess is the prior guess for a disturbance standard deviation on
  /// the standardized scale; weight is the prior sample size.
  static GammaPrior from_sd_guess(double sigma_guess, double weight) {
    if (!(sigma_guess > 0.0) || !(weight > 0.0)) {
      throw ConfigError("prior guesses must be positive");
    }
    return GammaPrior{0.5 * weight, 0.5 * weight * sigma_guess * sigma_guess};
  }

  static Priors defaults() {
    Priors p;
    p.obs_precision = from_sd_guess(0.1, 1.0);
    p.level_precision = from_sd_guess(0.01, 1.0);
    p.slope_precision = from_sd_guess(0.01, 1.0);
    p.seasonal_precision = from_sd_guess(0.01, 1.0);
    p.beta_prior_precision = 0.01;
    return p;
  }
};

/// Which structural components enter the state. level alone is a local
/// level; level + trend is the local linear trend (slope) block. The
/// regression block, when present, contributes a single pinned state
/// (initial mean 1, variance 0) whose observation loading is beta'x_t; beta
/// is sampled jointly outside the state recursion.
struct ModelSpec {
  bool level = true;
  bool trend = false;
  int seasonal_period = 0;                     // 0 disables the seasonal term
  std::optional<Eigen::MatrixXd> regression;   // T x K design, row per time

  void validate(long n_obs) const {
    if (trend && !level) {
      throw ConfigError("a trend slope requires the level component");
    }
    if (!level && seasonal_period == 0 && !regression) {
      throw ConfigError("model has no components");
    }
    if (seasonal_period == 1 || seasonal_period < 0) {
      throw ConfigError("seasonal period must be 0 or >= 2");
    }
    if (regression) {
      if (regression->rows() != n_obs) {
        throw ConfigError("regression design has " +
                          std::to_string(regression->rows()) +
                          " rows for " + std::to_string(n_obs) +
                          " observations");
      }
      if (regression->cols() < 1) {
        throw ConfigError("regression design has no columns");
      }
      if (!regression->allFinite()) {
        throw DataError("regression design contains non-finite values");
      }
    }
  }
};

/// Time-invariant pieces of y_t = Z_t' alpha_t + eps_t,
/// alpha_{t+1} = T alpha_t + R eta_t. Only the regression row of Z varies
/// with t (it carries beta'x_t); design_at() materializes the full vector.
struct StateSpace {
  Eigen::MatrixXd transition;            // m x m
  Eigen::MatrixXd selection;             // m x r (columns pick noisy states)
  Eigen::VectorXd design_base;           // static part of Z
  Eigen::VectorXd init_mean;             // a_1
  Eigen::VectorXd init_var_diag;         // diag of P_1
  std::vector<std::string> noise_names;  // one per selection column
  int level_state = -1;
  int slope_state = -1;
  int seasonal_state = -1;  // first seasonal state
  int regression_state = -1;

  long dim() const { return transition.rows(); }
  long n_noise() const { return selection.cols(); }

  Eigen::VectorXd design_at(double regression_mean) const {
    Eigen::VectorXd z = design_base;
    if (regression_state >= 0) z(regression_state) = regression_mean;
    return z;
  }
};

/// Diffuse initialization is approximated with a large finite variance; the
/// pinned regression state keeps exactly zero variance so the filter treats
/// it as known.
inline constexpr double kDiffuseVariance = 1e6;

inline StateSpace assemble(const ModelSpec& spec) {
  int m = 0;
  int level = -1, slope = -1, seasonal = -1, reg = -1;
  if (spec.level && spec.trend) {
    level = m;
    slope = m + 1;
    m += 2;
  } else if (spec.level) {
    level = m;
    m += 1;
  }
  if (spec.seasonal_period >= 2) {
    seasonal = m;
    m += spec.seasonal_period - 1;
  }
  if (spec.regression) {
    reg = m;
    m += 1;
  }

  StateSpace ss;
  ss.level_state = level;
  ss.slope_state = slope;
  ss.seasonal_state = seasonal;
  ss.regression_state = reg;
  ss.transition = Eigen::MatrixXd::Zero(m, m);
  ss.design_base = Eigen::VectorXd::Zero(m);
  ss.init_mean = Eigen::VectorXd::Zero(m);
  ss.init_var_diag = Eigen::VectorXd::Constant(m, kDiffuseVariance);

  int n_noise = 0;
  if (spec.level) n_noise += spec.trend ? 2 : 1;
  if (spec.seasonal_period >= 2) n_noise += 1;
  ss.selection = Eigen::MatrixXd::Zero(m, n_noise);

  int col = 0;
  if (spec.level && spec.trend) {
    ss.transition(level, level) = 1.0;
    ss.transition(level, slope) = 1.0;
    ss.transition(slope, slope) = 1.0;
    ss.design_base(level) = 1.0;
    ss.selection(level, col) = 1.0;
    ss.noise_names.push_back("level");
    ss.selection(slope, col + 1) = 1.0;
    ss.noise_names.push_back("slope");
    col += 2;
  } else if (spec.level) {
    ss.transition(level, level) = 1.0;
    ss.design_base(level) = 1.0;
    ss.selection(level, col) = 1.0;
    ss.noise_names.push_back("level");
    ++col;
  }
  if (spec.seasonal_period >= 2) {
    int s = spec.seasonal_period;
    for (int j = 0; j < s - 1; ++j) ss.transition(seasonal, seasonal + j) = -1.0;
    for (int j = 1; j < s - 1; ++j) {
      ss.transition(seasonal + j, seasonal + j - 1) = 1.0;
    }
    ss.design_base(seasonal) = 1.0;
    ss.selection(seasonal, col) = 1.0;
    ss.noise_names.push_back("seasonal");
    ++col;
  }
  if (spec.regression) {
    ss.transition(reg, reg) = 1.0;
    // design_base(reg) stays 0; design_at() fills in beta'x_t per step.
    ss.init_mean(reg) = 1.0;
    ss.init_var_diag(reg) = 0.0;
  }
  return ss;
}

}  // namespace eventimpact
