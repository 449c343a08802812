#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "eventimpact/errors.hpp"
#include "eventimpact/model.hpp"

namespace eventimpact {

/// Missing observations are encoded as NaN: the filter propagates the state
/// through such steps without an update and they contribute nothing to the
/// log-likelihood.
inline bool is_missing(double y) { return std::isnan(y); }

struct KalmanResult {
  double loglik = 0.0;
  // Predicted (one-step-ahead) moments a_t = E[alpha_t | y_{1:t-1}],
  // P_t = Var[alpha_t | y_{1:t-1}]; column/entry n holds a_{T+1}, P_{T+1}.
  Eigen::MatrixXd predicted_mean;          // m x (n+1)
  std::vector<Eigen::MatrixXd> predicted_var;
  Eigen::VectorXd innovation;              // v_t, NaN on missing steps
  Eigen::VectorXd innovation_var;          // F_t, NaN on missing steps
  Eigen::MatrixXd gain;                    // m x n, K_t columns
  std::vector<char> observed;
  long n() const { return innovation.size(); }
};

struct SmoothResult {
  Eigen::MatrixXd mean;                    // m x n, E[alpha_t | y_{1:n}]
  std::vector<Eigen::MatrixXd> var;        // Var[alpha_t | y_{1:n}]
};

/// state_noise_var holds one variance per selection column of `ss`;
/// regression_mean supplies beta'x_t per step (empty when the model has no
/// regression). init_mean_override lets the simulation smoother run the same
/// system with a zero initial mean.
inline KalmanResult kalman_filter(
    const StateSpace& ss, const Eigen::VectorXd& y, double obs_var,
    const Eigen::VectorXd& state_noise_var,
    const Eigen::VectorXd& regression_mean = Eigen::VectorXd(),
    const Eigen::VectorXd* init_mean_override = nullptr) {
  const long m = ss.dim();
  const long n = y.size();
  if (state_noise_var.size() != ss.n_noise()) {
    throw NumericError("state noise vector does not match selection columns");
  }
  if (ss.regression_state >= 0 && regression_mean.size() != n) {
    throw NumericError("regression mean path does not match series length");
  }
  if (!(obs_var >= 0.0)) {
    throw NumericError("negative observation variance");
  }

  const Eigen::MatrixXd& T = ss.transition;
  Eigen::MatrixXd RQR = ss.selection * state_noise_var.asDiagonal() *
                        ss.selection.transpose();

  KalmanResult res;
  res.predicted_mean.resize(m, n + 1);
  res.predicted_var.reserve(n + 1);
  res.innovation.resize(n);
  res.innovation_var.resize(n);
  res.gain = Eigen::MatrixXd::Zero(m, n);
  res.observed.resize(n);

  Eigen::VectorXd a = init_mean_override ? *init_mean_override : ss.init_mean;
  Eigen::MatrixXd P = ss.init_var_diag.asDiagonal();
  constexpr double half_log_2pi = 0.9189385332046727;

  for (long t = 0; t < n; ++t) {
    res.predicted_mean.col(t) = a;
    res.predicted_var.push_back(P);
    Eigen::VectorXd z = ss.design_at(
        ss.regression_state >= 0 ? regression_mean(t) : 0.0);
    if (is_missing(y(t))) {
      res.observed[t] = 0;
      res.innovation(t) = std::numeric_limits<double>::quiet_NaN();
      res.innovation_var(t) = std::numeric_limits<double>::quiet_NaN();
      a = T * a;
      P = T * P * T.transpose() + RQR;
    } else {
      res.observed[t] = 1;
      double v = y(t) - z.dot(a);
      double F = z.dot(P * z) + obs_var;
      if (!(F > 0.0) || !std::isfinite(F)) {
        throw NumericError("non-positive innovation variance at step " +
                           std::to_string(t));
      }
      Eigen::VectorXd K = T * (P * z) / F;
      Eigen::MatrixXd L = T - K * z.transpose();
      res.innovation(t) = v;
      res.innovation_var(t) = F;
      res.gain.col(t) = K;
      res.loglik -= half_log_2pi + 0.5 * (std::log(F) + v * v / F);
      a = T * a + K * v;
      P = T * P * L.transpose() + RQR;
    }
    // keep symmetry against drift (eval: transpose aliases its source)
    P = 0.5 * (P + P.transpose()).eval();
  }
  res.predicted_mean.col(n) = a;
  res.predicted_var.push_back(P);
  if (!std::isfinite(res.loglik)) {
    throw NumericError("non-finite filter log-likelihood");
  }
  return res;
}

/// Backward smoother on filter output. The r/N recursion never inverts a
/// state covariance, so it remains valid with the exactly-singular P induced
/// by the pinned regression state.
inline SmoothResult kalman_smoother(
    const StateSpace& ss, const KalmanResult& kf,
    const Eigen::VectorXd& regression_mean = Eigen::VectorXd()) {
  const long m = ss.dim();
  const long n = kf.n();
  const Eigen::MatrixXd& T = ss.transition;

  SmoothResult sm;
  sm.mean.resize(m, n);
  sm.var.assign(n, Eigen::MatrixXd());

  Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(m, m);
  for (long t = n - 1; t >= 0; --t) {
    if (kf.observed[t]) {
      Eigen::VectorXd z = ss.design_at(
          ss.regression_state >= 0 ? regression_mean(t) : 0.0);
      double F = kf.innovation_var(t);
      Eigen::MatrixXd L = T - kf.gain.col(t) * z.transpose();
      r = z * (kf.innovation(t) / F) + L.transpose() * r;
      N = (z * z.transpose()) / F + L.transpose() * N * L;
    } else {
      r = T.transpose() * r;
      N = T.transpose() * N * T;
    }
    const Eigen::MatrixXd& P = kf.predicted_var[t];
    sm.mean.col(t) = kf.predicted_mean.col(t) + P * r;
    Eigen::MatrixXd V = P - P * N * P;
    sm.var[t] = 0.5 * (V + V.transpose());
  }
  return sm;
}

}  // namespace eventimpact
