#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "tk/gaussian_knockoff.hpp"
#include "tk/linalg.hpp"
#include "tk/model.hpp"
#include "tk/rng.hpp"

namespace tk {

// Two-component Gaussian mixture describing the covariate law after conditioning on
// being sampled, in the squared-exponential selection + case-control setting. The
// components share unnormalized kernel weights w1_raw/w2_raw; Cholesky factors are
// cached for per-row posterior evaluation.
struct GaussianMixtureTilt {
  Matrix sigma_tilde;
  Vector mu_tilde;
  double w1_raw = 0.0;
  double w2_raw = 0.0;
  double y = 0.0;
  Matrix base_chol;   // lower factor of the population sigma
  Matrix tilde_chol;  // lower factor of sigma_tilde
};

GaussianMixtureTilt exact_mixture_tilt(const Matrix& sigma, const Vector& gamma_x,
                                       double gamma_y, double y, double rate_case,
                                       double rate_control);

// Posterior probability that x came from the tilted component, log-space.
double component_posterior_q1(const GaussianMixtureTilt& tilt, const Vector& x_row);

// Prior probability of the tilted component (kernel weight times its normalizer),
// i.e. the pi_1 appearing in the mixture's closed-form moments.
double component_prior_pi1(const GaussianMixtureTilt& tilt);

// Draws the component membership from its posterior, then samples a knockoff from
// that component's conditional. tilted_spec is built on sigma_tilde (its mean is
// overridden with mu_tilde), base_spec on the population moments.
Vector sample_mixture_knockoff(const GaussianMixtureTilt& tilt, const Vector& x_row,
                               const GaussianKnockoffSpec& tilted_spec,
                               const GaussianKnockoffSpec& base_spec, RngStream& rng);

// Importance-sampling description of a tilt against an arbitrary base covariate law.
// weight_fn(x, y, d) is the sampling probability given covariates and response; d is
// -1 when the tilt has no case/control component.
struct TiltSpec {
  const CovariateModel* base = nullptr;
  std::function<double(const Vector&, double, int)> weight_fn;
  long mc_draws = 0;    // 0 -> 100 * dim, capped at 1e6
  long ess_min = 50;
  int max_groups = 64;  // guard against accidentally continuous keys
};

struct GroupKey {
  double y = 0.0;
  int d = -1;  // -1 when the sample carries no case/control label

  friend bool operator<(const GroupKey& a, const GroupKey& b) {
    return a.y < b.y || (a.y == b.y && a.d < b.d);
  }
  friend bool operator==(const GroupKey& a, const GroupKey& b) {
    return a.y == b.y && a.d == b.d;
  }
};

struct TiltedMoments {
  GroupKey key;
  Vector mu_hat;
  Matrix sigma_hat;
  double ess = 0.0;
  long draws = 0;
  double ridge = 0.0;
  bool low_ess_warning = false;
};

TiltedMoments estimate_tilted_moments(const TiltSpec& spec, const GroupKey& key,
                                      RngStream& rng);

// Replaces each response value by the midpoint of its quantile bin, giving a small
// canonical set of conditioning values for moment estimation.
Vector discretize_quantiles(const Vector& y, int bins = 10);

// Groups rows by (y) or (y, d), estimates tilted moments per group, and samples
// second-order knockoffs row by row. Row order is preserved. Each group consumes a
// child RNG stream keyed by its rank in sorted key order.
Matrix second_order_tilted_knockoffs(const LabeledSample& sample, const TiltSpec& spec,
                                     RngStream& rng,
                                     std::vector<TiltedMoments>* diagnostics = nullptr);

}  // namespace tk
