#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "eventimpact/errors.hpp"
#include "eventimpact/model.hpp"
#include "eventimpact/rng.hpp"
#include "eventimpact/sampler.hpp"

namespace eventimpact {

/// Counterfactual paths on the data's original scale: one row per retained
/// draw, one column per post-event step. Each draw propagates its own final
/// training state through the transition with fresh system noise, adds the
/// regression mean from post_design (original-scale covariates, transformed
/// with the training standardization), and fresh observation noise. Draws
/// advance in row order with a fixed per-step RNG consumption, so output is
/// reproducible for a given rng state.
///
/// Without a regression the horizon is still carried by post_design's row
/// count: pass an H x 0 matrix.
inline Eigen::MatrixXd posterior_predictive(const PosteriorDraws& draws,
                                            const Eigen::MatrixXd& post_design,
                                            Rng& rng) {
  const long K = draws.n_covariates();
  if (K > 0 && post_design.cols() != K) {
    throw DataError("post-event design has " +
                    std::to_string(post_design.cols()) +
                    " columns; fitted regression expects " +
                    std::to_string(K));
  }
  if (K == 0 && post_design.size() > 0) {
    throw DataError("post-event design supplied but the fit has no "
                    "regression");
  }
  const long H = post_design.rows();
  const long R = draws.n_retained();
  Eigen::MatrixXd out(R, H);
  if (H == 0) return out;
  if (K > 0 && !post_design.allFinite()) {
    throw DataError("post-event design contains non-finite values");
  }

  StateSpace ss = assemble(draws.spec);
  if (ss.dim() != draws.state_dim()) {
    throw NumericError("draws state dimension disagrees with spec");
  }
  const Eigen::MatrixXd& T = ss.transition;
  const long J = ss.n_noise();

  // Standardize the post design with the training transforms.
  Eigen::MatrixXd Xstd;
  if (K > 0) {
    Xstd = post_design;
    for (long k = 0; k < K; ++k) {
      Xstd.col(k) = (Xstd.col(k).array() - draws.x_mean(k)) / draws.x_sd(k);
    }
  }

  for (long r = 0; r < R; ++r) {
    Eigen::VectorXd alpha = draws.final_state.row(r).transpose();
    Eigen::VectorXd noise_sd = draws.state_var.row(r).cwiseSqrt().transpose();
    double obs_sd = std::sqrt(draws.obs_var(r));
    for (long hstep = 0; hstep < H; ++hstep) {
      Eigen::VectorXd eta(J);
      for (long jcol = 0; jcol < J; ++jcol) {
        eta(jcol) = noise_sd(jcol) * rng.normal();
      }
      alpha = T * alpha + ss.selection * eta;
      double reg_mean = K > 0 ? Xstd.row(hstep).dot(draws.beta.row(r)) : 0.0;
      Eigen::VectorXd z = ss.design_at(reg_mean);
      double y_std = z.dot(alpha) + obs_sd * rng.normal();
      out(r, hstep) = draws.y_mean + draws.y_sd * y_std;
    }
  }
  return out;
}

}  // namespace eventimpact
