#include "tk/logistic.hpp"

#include <cmath>
#include <stdexcept>

#include "tk/knockoff_filter.hpp"

namespace tk {

namespace {

void check_labels(const Vector& y01) {
  if (y01.size() < 2) throw std::invalid_argument("fit_logistic: need at least two rows");
  double sum = 0.0;
  for (int i = 0; i < y01.size(); ++i) {
    if (y01[i] != 0.0 && y01[i] != 1.0)
      throw std::invalid_argument("fit_logistic: labels must be 0 or 1");
    sum += y01[i];
  }
  if (sum == 0.0 || sum == double(y01.size()))
    throw std::invalid_argument("fit_logistic: both classes must be present");
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// mean negative log-likelihood, stable for large |eta|
double mean_nll(const Vector& eta, const Vector& y) {
  double acc = 0.0;
  for (int i = 0; i < eta.size(); ++i) {
    const double e = eta[i];
    acc += std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e))) - y[i] * e;
  }
  return acc / double(eta.size());
}

LogisticFit newton_logistic(const Matrix& x, const Vector& y, double tol, int max_iter) {
  const int n = int(x.rows()), p = int(x.cols());
  Matrix xa(n, p + 1);
  xa.col(0).setOnes();
  xa.rightCols(p) = x;

  Vector beta = Vector::Zero(p + 1);
  Vector eta = Vector::Zero(n);
  double obj = mean_nll(eta, y);

  LogisticFit fit;
  fit.coef = Vector::Zero(p);
  for (int it = 0; it < max_iter; ++it) {
    Vector prob = eta.unaryExpr([](double z) { return sigmoid(z); });
    Vector g = xa.transpose() * (prob - y) / double(n);
    fit.final_gradient_norm = g.lpNorm<Eigen::Infinity>();
    fit.iterations = it;
    if (fit.final_gradient_norm < tol) {
      fit.converged = true;
      break;
    }

    Vector w = prob.array() * (1.0 - prob.array());
    Matrix h = xa.transpose() * w.asDiagonal() * xa / double(n);
    h.diagonal().array() += 1e-10;
    Vector step = h.ldlt().solve(-g);

    double t = 1.0;
    Vector cand;
    double cand_obj;
    while (true) {
      cand = eta + t * (xa * step);
      cand_obj = mean_nll(cand, y);
      if (cand_obj <= obj || t < 1e-18) break;
      t *= 0.5;
    }
    if (cand_obj > obj) break;  // stalled: no descent direction left
    beta += t * step;
    eta = cand;
    obj = cand_obj;
  }
  if (!fit.converged) {
    Vector prob = eta.unaryExpr([](double z) { return sigmoid(z); });
    fit.final_gradient_norm = (xa.transpose() * (prob - y) / double(n)).lpNorm<Eigen::Infinity>();
    fit.converged = fit.final_gradient_norm < tol;
    fit.iterations = max_iter;
  }
  fit.intercept = beta[0];
  fit.coef = beta.tail(p);
  return fit;
}

}  // namespace

LogisticFit fit_logistic(const Matrix& x, const Vector& y01, double lambda_l1, double tol,
                         int max_iter) {
  if (x.rows() != y01.size()) throw std::invalid_argument("fit_logistic: row mismatch");
  if (lambda_l1 < 0.0) throw std::invalid_argument("fit_logistic: negative penalty");
  check_labels(y01);
  if (lambda_l1 == 0.0) return newton_logistic(x, y01, tol, max_iter);

  PenalizedLogistic pl = penalized_logistic(x, y01, lambda_l1, tol, max_iter);
  LogisticFit fit;
  fit.intercept = pl.intercept;
  fit.coef = pl.coef;
  fit.converged = pl.converged;
  fit.iterations = pl.iterations;
  fit.final_gradient_norm = pl.final_gradient_norm;
  return fit;
}

double cross_validate_lambda(const Matrix& x, const Vector& y01, const Vector& lambda_grid,
                             int n_folds, RngStream& rng) {
  const int n = int(x.rows());
  if (lambda_grid.size() == 0) throw std::invalid_argument("cross_validate_lambda: empty grid");
  if (n_folds < 2 || n_folds > n)
    throw std::invalid_argument("cross_validate_lambda: folds must be in [2, n]");
  check_labels(y01);

  std::vector<int> fold_of(n);
  const std::vector<int> perm = rng.permutation(n);
  for (int i = 0; i < n; ++i) fold_of[perm[i]] = i % n_folds;

  double best_lambda = 0.0;
  double best_dev = std::numeric_limits<double>::infinity();
  std::vector<double> grid_sorted(lambda_grid.data(), lambda_grid.data() + lambda_grid.size());
  std::sort(grid_sorted.begin(), grid_sorted.end());

  for (double lambda : grid_sorted) {
    double dev_total = 0.0;
    for (int f = 0; f < n_folds; ++f) {
      int n_out = 0;
      for (int i = 0; i < n; ++i) n_out += fold_of[i] == f;
      const int n_in = n - n_out;
      Matrix x_in(n_in, x.cols());
      Vector y_in(n_in);
      Matrix x_out(n_out, x.cols());
      Vector y_out(n_out);
      int a = 0, b = 0;
      for (int i = 0; i < n; ++i) {
        if (fold_of[i] == f) {
          x_out.row(b) = x.row(i);
          y_out[b++] = y01[i];
        } else {
          x_in.row(a) = x.row(i);
          y_in[a++] = y01[i];
        }
      }
      LogisticFit fit = fit_logistic(x_in, y_in, lambda);
      Vector eta = (x_out * fit.coef).array() + fit.intercept;
      dev_total += 2.0 * double(n_out) * mean_nll(eta, y_out);
    }
    const double dev = dev_total / double(n);
    if (dev <= best_dev) {  // ties prefer the larger, sparser lambda
      best_dev = dev;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

LogisticFit adjust_intercept(const LogisticFit& fit, const PrevalenceAdjustment& adj) {
  const double ps = adj.sample_prevalence, pp = adj.population_prevalence;
  if (!(ps > 0.0 && ps < 1.0 && pp > 0.0 && pp < 1.0))
    throw std::invalid_argument("adjust_intercept: prevalences must lie strictly inside (0,1)");
  LogisticFit out = fit;
  out.intercept -= std::log(ps * (1.0 - pp) / (pp * (1.0 - ps)));
  return out;
}

LogisticFit two_stage_selection_model(const Matrix& x, const Vector& y, const Vector& d01,
                                      double q, const GaussianKnockoffSpec& spec,
                                      RngStream& rng) {
  const int n = int(x.rows()), p = int(x.cols());
  if (y.size() != n || d01.size() != n)
    throw std::invalid_argument("two_stage_selection_model: row mismatch");
  if (spec.p() != p) throw std::invalid_argument("two_stage_selection_model: spec size mismatch");

  Matrix x_knock = sample_knockoffs(spec, x, rng);
  KnockoffResult screen = knockoff_filter(x, x_knock, d01, Family::Binomial, q, 1, rng, {});

  const int k = int(screen.selected.size());
  Matrix design(n, k + 1);
  for (int i = 0; i < k; ++i) design.col(i) = x.col(screen.selected[i]);
  design.col(k) = y;

  LogisticFit stage2 = fit_logistic(design, d01, 0.0);
  LogisticFit out;
  out.intercept = stage2.intercept;
  out.coef = Vector::Zero(p + 1);
  for (int i = 0; i < k; ++i) out.coef[screen.selected[i]] = stage2.coef[i];
  out.coef[p] = stage2.coef[k];
  out.converged = stage2.converged;
  out.iterations = stage2.iterations;
  out.final_gradient_norm = stage2.final_gradient_norm;
  return out;
}

}  // namespace tk
