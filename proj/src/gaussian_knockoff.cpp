#include "tk/gaussian_knockoff.hpp"

#include <stdexcept>

namespace tk {

Matrix GaussianKnockoffSpec::joint_covariance() const {
  const int d = p();
  Matrix g(2 * d, 2 * d);
  Matrix off = sigma;
  off.diagonal() -= s;
  g.topLeftCorner(d, d) = sigma;
  g.bottomRightCorner(d, d) = sigma;
  g.topRightCorner(d, d) = off;
  g.bottomLeftCorner(d, d) = off;
  return g;
}

Vector solve_s_equicorrelation(const Matrix& sigma) {
  Matrix corr;
  Vector sd;
  cov_to_correlation(sigma, corr, sd);
  cholesky_lower(sigma, "solve_s_equicorrelation");  // PD gate
  const double lam = min_eigenvalue(corr);
  double s_corr = 2.0 * lam;
  if (s_corr >= 1.0 - 1e-9)
    s_corr = 1.0;
  else
    s_corr *= 1.0 - 1e-6;  // keep the joint matrix off the PSD boundary
  return s_corr * sigma.diagonal();
}

GaussianKnockoffSpec build_spec(const Vector& mu, const Matrix& sigma, const Vector& s) {
  const int p = static_cast<int>(mu.size());
  if (sigma.rows() != p || sigma.cols() != p || s.size() != p)
    throw std::invalid_argument("build_spec: dimension mismatch");
  if (s.minCoeff() < 0.0) throw std::invalid_argument("build_spec: s must be non-negative");

  Eigen::LLT<Matrix> llt(symmetrize(sigma));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("build_spec: sigma factorization failed (not PD)");

  GaussianKnockoffSpec spec;
  spec.mu = mu;
  spec.sigma = symmetrize(sigma);
  spec.s = s;
  spec.cond_mean_map = s.asDiagonal() * llt.solve(Matrix::Identity(p, p));
  // PSD of the joint G is equivalent (given sigma PD) to PSD of the Schur
  // complement 2 diag(s) - diag(s) Sigma^-1 diag(s); the factor below throws
  // with the most negative eigenvalue if that fails beyond tolerance.
  Matrix cond_cov = -spec.cond_mean_map * s.asDiagonal();
  cond_cov.diagonal() += 2.0 * s;
  spec.cond_cov_chol = psd_sqrt_factor(cond_cov);
  return spec;
}

Matrix sample_knockoffs(const GaussianKnockoffSpec& spec, const Matrix& x, RngStream& rng) {
  if (x.cols() != spec.p()) throw std::invalid_argument("sample_knockoffs: dimension mismatch");
  const int n = static_cast<int>(x.rows());
  Matrix centered = x.rowwise() - spec.mu.transpose();
  Matrix z = standard_normal_matrix(n, spec.p(), rng);
  return x - centered * spec.cond_mean_map.transpose() + z * spec.cond_cov_chol.transpose();
}

Vector sample_knockoff_row(const GaussianKnockoffSpec& spec, const Vector& x_row, RngStream& rng,
                           const Vector* mu_override) {
  const Vector& mu = mu_override ? *mu_override : spec.mu;
  Vector z(spec.p());
  for (int j = 0; j < spec.p(); ++j) z[j] = rng.normal();
  return x_row - spec.cond_mean_map * (x_row - mu) + spec.cond_cov_chol * z;
}

}  // namespace tk
