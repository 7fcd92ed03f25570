#pragma once

#include <vector>

#include "tk/linalg.hpp"

namespace tk {

enum class Family { Gaussian, Binomial };

struct PathConfig {
  int grid_size = 100;
  double grid_eps = 1e-3;    // lambda_min = lambda_max * grid_eps
  double kkt_tol = 1e-8;     // per-grid-point stationarity target
  int max_sweeps = 20000;    // coordinate sweeps per grid point
  bool keep_coefficients = false;
  bool stop_when_all_entered = true;
};

/// Solution path summary on the standardized design. Coefficients (when
/// kept) are on the standardized scale; entry_index[j] is the first
/// (largest-lambda) grid index at which column j is active, -1 if never.
struct LassoPath {
  Vector lambda_grid;
  std::vector<int> entry_index;
  int grid_points_used = 0;
  bool converged = true;
  Matrix beta_path;       // grid_points_used x p when keep_coefficients
  Vector intercept_path;  // standardized-scale intercept per grid point
};

/// Columns to mean 0 / variance 1 (1/n). Near-constant columns are zeroed
/// with scale recorded as 1 so they can never enter the path.
void standardize_columns(const Matrix& x, Matrix& xs, Vector& mean, Vector& scale);

/// Pathwise coordinate descent with warm starts over a geometric grid from
/// lambda_max = max_j |x_j' (y - ybar)| / n down to lambda_max * grid_eps.
LassoPath lasso_entry_path(const Matrix& x, const Vector& y, Family family,
                           const PathConfig& cfg = {});

struct PenalizedLogistic {
  double intercept = 0.0;
  Vector coef;  // original scale
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;  // sup-norm of the l1 subgradient residual
};

/// l1-penalized logistic regression (intercept unpenalized) by IRLS with an
/// inner coordinate-descent solve; lambda > 0.
PenalizedLogistic penalized_logistic(const Matrix& x, const Vector& y01, double lambda,
                                     double tol = 1e-8, int max_iter = 500);

}  // namespace tk
