#pragma once

#include "tk/gaussian_knockoff.hpp"
#include "tk/lasso_path.hpp"
#include "tk/linalg.hpp"
#include "tk/rng.hpp"

namespace tk {

struct LogisticFit {
  double intercept = 0.0;
  Vector coef;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
};

// lambda_l1 = 0 fits by Newton/IRLS with step halving; lambda_l1 > 0 by proximal
// coordinate descent with an unpenalized intercept. Coefficients come back on the
// original scale either way.
LogisticFit fit_logistic(const Matrix& x, const Vector& y01, double lambda_l1 = 0.0,
                         double tol = 1e-8, int max_iter = 500);

// Mean held-out deviance over random folds; ties resolve to the larger (sparser) lambda.
double cross_validate_lambda(const Matrix& x, const Vector& y01, const Vector& lambda_grid,
                             int n_folds, RngStream& rng);

struct PrevalenceAdjustment {
  double sample_prevalence = 0.0;
  double population_prevalence = 0.0;
};

// Case-control intercept correction: shifts the intercept by the log-odds offset
// between the sample and population prevalences, leaving slopes untouched.
LogisticFit adjust_intercept(const LogisticFit& fit, const PrevalenceAdjustment& adj);

// Stage 1 screens covariates for the case/control label with the knockoff+ filter at
// level q; stage 2 refits an unpenalized logistic on the survivors plus y. The result
// has coef of length p + 1 (x coefficients zero-padded, y coefficient last). An empty
// screen falls back to the y-only model.
LogisticFit two_stage_selection_model(const Matrix& x, const Vector& y, const Vector& d01,
                                      double q, const GaussianKnockoffSpec& spec,
                                      RngStream& rng);

}  // namespace tk
