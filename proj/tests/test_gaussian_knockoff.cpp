#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tk/gaussian_knockoff.hpp"

using namespace tk;

namespace {

Matrix ar1(int p, double rho) {
  Matrix s(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) s(i, j) = std::pow(rho, std::abs(i - j));
  return s;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

}  // namespace

TEST_CASE("equicorrelated s on closed-form 2x2 examples") {
  CHECK(solve_s_equicorrelation(Matrix::Identity(3, 3)) == Vector::Ones(3));

  Matrix half(2, 2);
  half << 1.0, 0.5, 0.5, 1.0;  // eigenvalues 1 +- 0.5, 2*lambda_min = 1
  Vector s = solve_s_equicorrelation(half);
  CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(1.0).epsilon(1e-12));

  Matrix tight(2, 2);
  tight << 1.0, 0.9, 0.9, 1.0;  // 2*lambda_min = 0.2
  s = solve_s_equicorrelation(tight);
  CHECK(s[0] == doctest::Approx(0.2).epsilon(1e-5));
  CHECK(s[1] == doctest::Approx(0.2).epsilon(1e-5));

  // Covariance units: scaling the diagonal scales s.
  Matrix scaled = Matrix::Zero(2, 2);
  scaled(0, 0) = 4.0;
  scaled(1, 1) = 1.0;
  s = solve_s_equicorrelation(scaled);
  CHECK(s[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(1.0).epsilon(1e-12));

  Matrix notpd = Matrix::Ones(2, 2);
  CHECK_THROWS_AS(solve_s_equicorrelation(notpd), std::exception);
}

TEST_CASE("solve_s keeps the joint matrix PSD on random covariances") {
  RngStream rng(909);
  const int p = 12;
  for (int rep = 0; rep < 20; ++rep) {
    Matrix a = standard_normal_matrix(p, p, rng);
    Matrix sigma = symmetrize(a * a.transpose() / p) + 0.05 * Matrix::Identity(p, p);
    for (int j = 0; j < p; ++j) {
      const double c = 0.5 + rng.uniform();
      sigma.row(j) *= c;
      sigma.col(j) *= c;
    }
    Vector s = solve_s_equicorrelation(sigma);
    CHECK(s.minCoeff() >= 0.0);
    GaussianKnockoffSpec spec = build_spec(Vector::Zero(p), sigma, s);
    const double lam = min_eigenvalue(spec.joint_covariance());
    CHECK(lam >= -1e-8 * std::max(1.0, sigma.diagonal().maxCoeff()));
  }
}

TEST_CASE("zero s reproduces x exactly") {
  Matrix sigma = ar1(4, 0.5);
  GaussianKnockoffSpec spec = build_spec(Vector::Zero(4), sigma, Vector::Zero(4));
  RngStream rng(11);
  Matrix x = standard_normal_matrix(50, 4, rng);
  Matrix xt = sample_knockoffs(spec, x, rng);
  CHECK(xt == x);
}

TEST_CASE("identity sigma with s = 1 gives independent knockoffs") {
  const int p = 3, n = 100000;
  Vector mu(p);
  mu << 1.0, -2.0, 0.5;
  GaussianKnockoffSpec spec = build_spec(mu, Matrix::Identity(p, p), Vector::Ones(p));
  RngStream rng(12);
  Matrix x = standard_normal_matrix(n, p, rng).rowwise() + mu.transpose();
  Matrix xt = sample_knockoffs(spec, x, rng);
  for (int j = 0; j < p; ++j) {
    CHECK(std::abs(xt.col(j).mean() - mu[j]) < 5.0 / std::sqrt(double(n)));
    const double c = ((x.col(j).array() - x.col(j).mean()) *
                      (xt.col(j).array() - xt.col(j).mean()))
                         .mean();
    CHECK(std::abs(c) < 5.0 / std::sqrt(double(n)));
  }
}

TEST_CASE("joint second moment matches G on a varied-diagonal covariance") {
  const int p = 6, n = 100000;
  Vector sd(p);
  sd << 1.0, 1.5, 0.8, 1.2, 0.6, 2.0;
  Matrix sigma = sd.asDiagonal() * ar1(p, 0.6) * sd.asDiagonal();
  Vector mu = Vector::LinSpaced(p, -1.0, 1.0);
  Vector s = solve_s_equicorrelation(sigma);
  GaussianKnockoffSpec spec = build_spec(mu, sigma, s);
  Matrix g = spec.joint_covariance();

  RngStream rng(13);
  Matrix x = standard_normal_matrix(n, p, rng) * cholesky_lower(sigma, "test").transpose();
  x.rowwise() += mu.transpose();
  Matrix xt = sample_knockoffs(spec, x, rng);
  Matrix joint(n, 2 * p);
  joint << x, xt;

  Matrix chat = sample_covariance(joint);
  for (int i = 0; i < 2 * p; ++i)
    for (int j = 0; j < 2 * p; ++j) {
      const double se = std::sqrt((g(i, i) * g(j, j) + g(i, j) * g(i, j)) / n);
      CHECK(std::abs(chat(i, j) - g(i, j)) < 5.0 * se);
    }
  Vector mhat = column_means(joint);
  for (int j = 0; j < 2 * p; ++j)
    CHECK(std::abs(mhat[j] - mu[j % p]) < 5.0 * std::sqrt(g(j, j) / n));
}

TEST_CASE("swap symmetry of (X_j, Xt_j, X_k) distributions") {
  const int p = 5, n = 10000;
  Matrix sigma = ar1(p, 0.5);
  Vector s = solve_s_equicorrelation(sigma);
  GaussianKnockoffSpec spec = build_spec(Vector::Zero(p), sigma, s);

  auto draw = [&](std::uint64_t seed, Matrix& x, Matrix& xt) {
    RngStream rng(seed);
    x = standard_normal_matrix(n, p, rng) * cholesky_lower(sigma, "test").transpose();
    xt = sample_knockoffs(spec, x, rng);
  };
  Matrix x1, xt1, x2, xt2;
  draw(21, x1, xt1);
  draw(22, x2, xt2);

  RngStream proj_rng(23);
  const double crit = 1.949 * std::sqrt(2.0 / n);  // alpha ~ 0.001
  for (int j : {0, 3}) {
    const int k = (j + 1) % p;
    for (int rep = 0; rep < 3; ++rep) {
      Vector a(3);
      a << proj_rng.normal(), proj_rng.normal(), proj_rng.normal();
      std::vector<double> u(n), v(n);
      for (int i = 0; i < n; ++i) {
        u[i] = a[0] * x1(i, j) + a[1] * xt1(i, j) + a[2] * x1(i, k);
        v[i] = a[0] * xt2(i, j) + a[1] * x2(i, j) + a[2] * x2(i, k);
      }
      CHECK(ks_two_sample(u, v) < crit);
    }
  }
}

TEST_CASE("row sampler matches the conditional law, with and without mean override") {
  const int p = 3, n = 200000;
  Matrix sigma = ar1(p, 0.5);
  Vector mu(p);
  mu << 1.0, -2.0, 0.5;
  Vector s = solve_s_equicorrelation(sigma);
  GaussianKnockoffSpec spec = build_spec(mu, sigma, s);

  Vector x_row(p);
  x_row << 2.0, 0.0, -1.0;
  Matrix cond_cov = spec.cond_cov_chol * spec.cond_cov_chol.transpose();

  auto check_moments = [&](const Vector* override_mu) {
    const Vector& m = override_mu ? *override_mu : mu;
    Vector want_mean = x_row - spec.cond_mean_map * (x_row - m);
    RngStream rng(31);
    Matrix draws(n, p);
    for (int i = 0; i < n; ++i) draws.row(i) = sample_knockoff_row(spec, x_row, rng, override_mu);
    Vector mhat = column_means(draws);
    Matrix chat = sample_covariance(draws);
    for (int j = 0; j < p; ++j)
      CHECK(std::abs(mhat[j] - want_mean[j]) < 5.0 * std::sqrt(cond_cov(j, j) / n));
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        const double se =
            std::sqrt((cond_cov(i, i) * cond_cov(j, j) + cond_cov(i, j) * cond_cov(i, j)) / n);
        CHECK(std::abs(chat(i, j) - cond_cov(i, j)) < 5.0 * se);
      }
  };
  check_moments(nullptr);
  Vector shifted(p);
  shifted << 10.0, 10.0, 10.0;
  check_moments(&shifted);
}

TEST_CASE("oversized s fails the PSD gate with the eigenvalue in the message") {
  Matrix tight(2, 2);
  tight << 1.0, 0.9, 0.9, 1.0;
  Vector s = Vector::Constant(2, 1.5);
  CHECK_THROWS_WITH_AS(build_spec(Vector::Zero(2), tight, s), doctest::Contains("not PSD"),
                       std::runtime_error);
  CHECK_THROWS_AS(build_spec(Vector::Zero(2), tight, Vector::Constant(2, -0.1)),
                  std::invalid_argument);
}

TEST_CASE("knockoff sampling is deterministic in the seed") {
  Matrix sigma = ar1(4, 0.4);
  GaussianKnockoffSpec spec =
      build_spec(Vector::Zero(4), sigma, solve_s_equicorrelation(sigma));
  RngStream r1(77), r2(77);
  Matrix x = standard_normal_matrix(20, 4, r1);
  Matrix x_b = standard_normal_matrix(20, 4, r2);
  CHECK(sample_knockoffs(spec, x, r1) == sample_knockoffs(spec, x_b, r2));
}
