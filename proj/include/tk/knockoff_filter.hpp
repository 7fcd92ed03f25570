#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "tk/lasso_path.hpp"
#include "tk/rng.hpp"

namespace tk {

/// Lasso entry statistics for the augmented design: z[j] (originals) and
/// z[j+p] (knockoffs) are the largest grid lambda at which the column is
/// active, 0 if it never enters.
struct FeatureStats {
  Vector z;
  Family family = Family::Gaussian;
  Vector lambda_grid;
};

/// Pathwise lasso over a seeded random column permutation of x_aug (the
/// permutation breaks solver-order asymmetry between a variable and its
/// knockoff); entries are mapped back to the input column order.
FeatureStats lasso_entry_stats(const Matrix& x_aug, const Vector& y, Family family,
                               int grid_size, RngStream& rng);

/// W_j = (Z_j v Z_{j+p}) * sign(Z_j - Z_{j+p}), sign(0) = 0.
Vector w_scores(const FeatureStats& stats);

/// Knockoff(+) threshold: min over candidate t in {|w_j| : w_j != 0} of
/// (offset + #{w <= -t}) / #{w >= t} <= q; +infinity when no t qualifies.
double knockoff_threshold(const Vector& w, double q, int offset);

/// fdp = |selected \ truth| / max(|selected|, 1);
/// power = |selected n truth| / max(|truth|, 1).
std::pair<double, double> fdp_power(const std::vector<int>& selected,
                                    const std::vector<int>& truth, int p);

struct KnockoffResult {
  Vector w;
  double tau = std::numeric_limits<double>::infinity();
  std::vector<int> selected;
  double fdp = 0.0;
  double power = 0.0;
};

/// Full filter: statistics on [x, x_knockoff], W scores, threshold at q,
/// selection, and FDP/power against the truth set.
KnockoffResult knockoff_filter(const Matrix& x, const Matrix& x_knockoff, const Vector& y,
                               Family family, double q, int offset, RngStream& rng,
                               const std::vector<int>& truth, int grid_size = 100);

}  // namespace tk
