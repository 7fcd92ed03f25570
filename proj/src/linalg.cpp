#include "tk/linalg.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tk {

double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double ridge_regularize_to_pd(Matrix& a, int max_escalations) {
  const int p = static_cast<int>(a.rows());
  a = symmetrize(a);
  double base = a.trace() / std::max(1, p);
  if (!(base > 0)) base = 1.0;
  double ridge = 1e-6 * base;
  for (int k = 0; k < max_escalations; ++k) {
    Matrix trial = a + ridge * Matrix::Identity(p, p);
    Eigen::LLT<Matrix> llt(trial);
    if (llt.info() == Eigen::Success) {
      a = trial;
      return ridge;
    }
    ridge *= 10.0;
  }
  throw std::runtime_error("ridge_regularize_to_pd: matrix not PD after escalation");
}

Matrix psd_sqrt_factor(const Matrix& a, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("psd_sqrt_factor: eigendecomposition failed");
  Vector ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  const double floor = -rel_tol * scale;
  if (ev.minCoeff() < floor) {
    std::ostringstream msg;
    msg << "psd_sqrt_factor: matrix not PSD, min eigenvalue " << ev.minCoeff();
    throw std::runtime_error(msg.str());
  }
  Vector root = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

Matrix cholesky_lower(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << what << ": Cholesky factorization failed (matrix not PD)";
    throw std::runtime_error(msg.str());
  }
  return llt.matrixL();
}

double cholesky_logdet(const Matrix& chol_lower) {
  return 2.0 * chol_lower.diagonal().array().log().sum();
}

void cov_to_correlation(const Matrix& sigma, Matrix& corr, Vector& sd) {
  const int p = static_cast<int>(sigma.rows());
  sd = sigma.diagonal().cwiseMax(0.0).cwiseSqrt();
  for (int j = 0; j < p; ++j)
    if (!(sd[j] > 0)) throw std::invalid_argument("cov_to_correlation: zero diagonal entry");
  Vector inv = sd.cwiseInverse();
  corr = inv.asDiagonal() * symmetrize(sigma) * inv.asDiagonal();
  corr.diagonal().setOnes();
}

Matrix standard_normal_matrix(int n, int p, RngStream& rng) {
  Matrix z(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) z(i, j) = rng.normal();
  return z;
}

Vector column_means(const Matrix& x) { return x.colwise().mean(); }

Matrix sample_covariance(const Matrix& x) {
  const double n = static_cast<double>(x.rows());
  Matrix centered = x.rowwise() - x.colwise().mean();
  return (centered.transpose() * centered) / n;
}

}  // namespace tk
