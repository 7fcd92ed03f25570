#include "tk/lasso_path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tk {

namespace {

inline double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

inline double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// sup-norm of the l1 subgradient residual for gradient g = d(smooth)/d(beta).
double kkt_residual(const Vector& g, const Vector& beta, double lambda) {
  double worst = 0.0;
  for (int j = 0; j < beta.size(); ++j) {
    const double r = beta[j] != 0.0 ? std::abs(g[j] + lambda * (beta[j] > 0 ? 1.0 : -1.0))
                                    : std::max(0.0, std::abs(g[j]) - lambda);
    worst = std::max(worst, r);
  }
  return worst;
}

Vector make_grid(double lam_max, int grid_size, double eps) {
  Vector grid(grid_size);
  if (grid_size == 1) {
    grid[0] = lam_max;
    return grid;
  }
  for (int k = 0; k < grid_size; ++k)
    grid[k] = lam_max * std::pow(eps, double(k) / double(grid_size - 1));
  return grid;
}

struct GaussianCd {
  const Matrix& xs;
  Vector r;  // residual yc - xs * beta
  Vector beta;
  Vector last_grad;
  double n;

  GaussianCd(const Matrix& xs_, const Vector& yc)
      : xs(xs_), r(yc), beta(Vector::Zero(xs_.cols())), n(double(xs_.rows())) {}

  double update(int j, double lam) {
    const double bj = beta[j];
    const double z = bj + xs.col(j).dot(r) / n;
    const double nb = soft_threshold(z, lam);
    if (nb != bj) {
      r.noalias() += xs.col(j) * (bj - nb);
      beta[j] = nb;
    }
    return std::abs(nb - bj);
  }

  Vector gradient() const { return -(xs.transpose() * r) / n; }

  // Sweeps to stationarity at lam; returns false on sweep exhaustion.
  bool solve(double lam, double kkt_tol, int max_sweeps, int& sweeps_used) {
    const int p = int(xs.cols());
    std::vector<int> active;
    for (int pass = 0; sweeps_used < max_sweeps; ++pass) {
      double maxd = 0.0;
      active.clear();
      for (int j = 0; j < p; ++j) {
        maxd = std::max(maxd, update(j, lam));
        if (beta[j] != 0.0) active.push_back(j);
      }
      ++sweeps_used;
      while (maxd > 1e-12 && sweeps_used < max_sweeps) {
        maxd = 0.0;
        for (int j : active) maxd = std::max(maxd, update(j, lam));
        ++sweeps_used;
      }
      last_grad = gradient();
      if (kkt_residual(last_grad, beta, lam) < kkt_tol) return true;
    }
    last_grad = gradient();
    return false;
  }
};

struct BinomialCd {
  const Matrix& xs;
  const Vector& y;
  Vector beta;
  double beta0;
  Vector eta;  // beta0 + xs * beta
  Vector last_grad;
  double n;

  BinomialCd(const Matrix& xs_, const Vector& y_)
      : xs(xs_), y(y_), beta(Vector::Zero(xs_.cols())), beta0(0.0), n(double(xs_.rows())) {
    double pbar = std::min(1.0 - 1e-10, std::max(1e-10, y.mean()));
    beta0 = std::log(pbar / (1.0 - pbar));
    eta = Vector::Constant(xs.rows(), beta0);
  }

  Vector probabilities() const {
    return eta.unaryExpr([](double z) { return stable_sigmoid(z); });
  }

  Vector gradient() const { return (xs.transpose() * (probabilities() - y)) / n; }

  double intercept_gradient() const { return (probabilities() - y).mean(); }

  // One IRLS step: quadratic approximation at current eta, solved by
  // coordinate descent. Returns max coefficient movement.
  double irls_step(double lam, int inner_sweeps, int& sweeps_used) {
    const int p = int(xs.cols());
    Vector prob = probabilities();
    Vector w = (prob.array() * (1.0 - prob.array())).cwiseMax(1e-10);
    Vector wr = (y - prob).cwiseQuotient(w);  // working residual z - eta
    Vector denom = ((xs.array().square().colwise() * w.array()).colwise().sum() / n).transpose();
    const double wsum = w.sum() / n;

    double total_move = 0.0;
    std::vector<int> active;
    for (int sweep = 0; sweep < inner_sweeps; ++sweep) {
      double maxd = 0.0;
      {  // unpenalized intercept
        const double d0 = w.dot(wr) / n / wsum;
        if (d0 != 0.0) {
          beta0 += d0;
          wr.array() -= d0;
          maxd = std::max(maxd, std::abs(d0));
        }
      }
      const bool full = sweep == 0 || active.empty();
      if (full) active.clear();
      const int count = full ? p : int(active.size());
      for (int t = 0; t < count; ++t) {
        const int j = full ? t : active[t];
        if (denom[j] <= 0.0) continue;
        const double bj = beta[j];
        const double zj = (xs.col(j).array() * w.array() * wr.array()).sum() / n + denom[j] * bj;
        const double nb = soft_threshold(zj, lam) / denom[j];
        if (nb != bj) {
          wr.noalias() -= xs.col(j) * (nb - bj);
          beta[j] = nb;
          maxd = std::max(maxd, std::abs(nb - bj));
        }
        if (full && beta[j] != 0.0) active.push_back(j);
      }
      ++sweeps_used;
      total_move = std::max(total_move, maxd);
      if (maxd < 1e-12) break;
    }
    eta.noalias() = xs * beta;
    eta.array() += beta0;
    return total_move;
  }

  bool solve(double lam, double kkt_tol, int max_sweeps, int& sweeps_used) {
    while (sweeps_used < max_sweeps) {
      const double moved = irls_step(lam, 200, sweeps_used);
      last_grad = gradient();
      const double res =
          std::max(kkt_residual(last_grad, beta, lam), std::abs(intercept_gradient()));
      if (res < kkt_tol) return true;
      if (moved == 0.0) return false;  // stalled
    }
    last_grad = gradient();
    return false;
  }
};

}  // namespace

void standardize_columns(const Matrix& x, Matrix& xs, Vector& mean, Vector& scale) {
  const double n = double(x.rows());
  mean = column_means(x);
  xs = x.rowwise() - mean.transpose();
  scale.resize(x.cols());
  for (int j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt(xs.col(j).squaredNorm() / n);
    if (sd < 1e-12) {
      scale[j] = 1.0;
      xs.col(j).setZero();
    } else {
      scale[j] = sd;
      xs.col(j) /= sd;
    }
  }
}

LassoPath lasso_entry_path(const Matrix& x, const Vector& y, Family family,
                           const PathConfig& cfg) {
  if (x.rows() != y.size()) throw std::invalid_argument("lasso_entry_path: dimension mismatch");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("lasso_entry_path: non-finite input");
  const int p = int(x.cols());
  const double n = double(x.rows());

  Matrix xs;
  Vector mean, scale;
  standardize_columns(x, xs, mean, scale);
  Vector r0 = y.array() - y.mean();
  const double lam_max = std::max((xs.transpose() * r0).cwiseAbs().maxCoeff() / n, 1e-12);

  LassoPath path;
  path.lambda_grid = make_grid(lam_max, cfg.grid_size, cfg.grid_eps);
  path.entry_index.assign(p, -1);
  if (cfg.keep_coefficients) {
    path.beta_path = Matrix::Zero(cfg.grid_size, p);
    path.intercept_path = Vector::Zero(cfg.grid_size);
  }

  GaussianCd gcd(xs, r0);
  BinomialCd bcd(xs, y);
  int sweeps_used = 0;
  for (int k = 0; k < cfg.grid_size; ++k) {
    const double lam = path.lambda_grid[k];
    bool ok;
    const Vector* beta;
    const Vector* grad;
    double intercept;
    if (family == Family::Gaussian) {
      ok = gcd.solve(lam, cfg.kkt_tol, cfg.max_sweeps, sweeps_used);
      beta = &gcd.beta;
      grad = &gcd.last_grad;
      intercept = y.mean();
    } else {
      ok = bcd.solve(lam, cfg.kkt_tol, cfg.max_sweeps, sweeps_used);
      beta = &bcd.beta;
      grad = &bcd.last_grad;
      intercept = bcd.beta0;
    }
    path.converged = path.converged && ok;
    // A column has entered when it is active, or sits on the KKT boundary
    // |g_j| = lambda (the sup over the optimal solution set, so exactly tied
    // columns such as a variable and its duplicated knockoff enter together).
    const double boundary = lam - 10.0 * cfg.kkt_tol;
    int entered = 0;
    for (int j = 0; j < p; ++j) {
      if (path.entry_index[j] < 0 &&
          ((*beta)[j] != 0.0 || std::abs((*grad)[j]) >= boundary))
        path.entry_index[j] = k;
      if (path.entry_index[j] >= 0) ++entered;
    }
    if (cfg.keep_coefficients) {
      path.beta_path.row(k) = beta->transpose();
      path.intercept_path[k] = intercept;
    }
    path.grid_points_used = k + 1;
    if (cfg.stop_when_all_entered && entered == p) break;
  }
  if (cfg.keep_coefficients) {
    path.beta_path.conservativeResize(path.grid_points_used, p);
    path.intercept_path.conservativeResize(path.grid_points_used);
  }
  return path;
}

PenalizedLogistic penalized_logistic(const Matrix& x, const Vector& y01, double lambda,
                                     double tol, int max_iter) {
  if (x.rows() != y01.size())
    throw std::invalid_argument("penalized_logistic: dimension mismatch");
  if (!(lambda > 0.0)) throw std::invalid_argument("penalized_logistic: lambda must be > 0");

  Matrix xs;
  Vector mean, scale;
  standardize_columns(x, xs, mean, scale);

  BinomialCd cd(xs, y01);
  PenalizedLogistic fit;
  int sweeps_used = 0;
  double res = 0.0;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    cd.irls_step(lambda, 200, sweeps_used);
    res = std::max(kkt_residual(cd.gradient(), cd.beta, lambda),
                   std::abs(cd.intercept_gradient()));
    if (res < tol) break;
  }
  fit.converged = res < tol;
  fit.iterations = iter + 1;
  fit.final_gradient_norm = res;
  fit.coef = cd.beta.cwiseQuotient(scale);
  fit.intercept = cd.beta0 - fit.coef.dot(mean);
  return fit;
}

}  // namespace tk
