#pragma once

#include "tk/linalg.hpp"
#include "tk/rng.hpp"

namespace tk {

/// Precomputed conditional law of Gaussian model-X knockoffs:
///   Xt | X ~ N(mu + (I - diag(s) Sigma^-1)(X - mu),
///              2 diag(s) - diag(s) Sigma^-1 diag(s)).
struct GaussianKnockoffSpec {
  Vector mu;
  Matrix sigma;
  Vector s;
  Matrix cond_mean_map;  // diag(s) * Sigma^-1
  Matrix cond_cov_chol;  // L with L L^T = conditional covariance (PSD factor)

  int p() const { return static_cast<int>(mu.size()); }

  /// Analytic joint covariance G = [[Sigma, Sigma-S],[Sigma-S, Sigma]].
  Matrix joint_covariance() const;
};

/// Equicorrelated s: with R the correlation matrix of sigma,
/// s_corr = min(2 lambda_min(R), 1), rescaled to covariance units
/// s_j = s_corr * sigma_jj. When the PSD boundary binds (2 lambda_min < 1)
/// the vector is shrunk by (1 - 1e-6) to keep factorizations stable.
Vector solve_s_equicorrelation(const Matrix& sigma);

GaussianKnockoffSpec build_spec(const Vector& mu, const Matrix& sigma, const Vector& s);

/// Row-wise independent draws from the conditional law.
Matrix sample_knockoffs(const GaussianKnockoffSpec& spec, const Matrix& x, RngStream& rng);

/// Single-row draw; `mu_override` replaces spec.mu in the conditional mean
/// (used for mixture components whose mean shifts with the response).
Vector sample_knockoff_row(const GaussianKnockoffSpec& spec, const Vector& x_row, RngStream& rng,
                           const Vector* mu_override = nullptr);

}  // namespace tk
