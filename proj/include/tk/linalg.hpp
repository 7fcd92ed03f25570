#pragma once

#include <Eigen/Dense>

#include "tk/rng.hpp"

namespace tk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double min_eigenvalue(const Matrix& a);

/// Adds ridge*I with ridge = 1e-6 * tr(a)/p, escalating by x10 until the
/// Cholesky factorization succeeds. Returns the ridge actually applied.
double ridge_regularize_to_pd(Matrix& a, int max_escalations = 12);

/// Factor L with L L^T = a for a PSD matrix (eigenvalue square root with
/// small negatives clamped to zero). Throws if min eigenvalue < -tol*scale.
Matrix psd_sqrt_factor(const Matrix& a, double rel_tol = 1e-8);

/// Lower Cholesky of a PD matrix; throws with the offending matrix context.
Matrix cholesky_lower(const Matrix& a, const char* what);

double cholesky_logdet(const Matrix& chol_lower);

/// Correlation matrix and the vector of standard deviations of a covariance.
void cov_to_correlation(const Matrix& sigma, Matrix& corr, Vector& sd);

Matrix standard_normal_matrix(int n, int p, RngStream& rng);

Vector column_means(const Matrix& x);
Matrix sample_covariance(const Matrix& x);  // 1/n normalization

}  // namespace tk
