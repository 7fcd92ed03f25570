#include "tk/knockoff_filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tk {

FeatureStats lasso_entry_stats(const Matrix& x_aug, const Vector& y, Family family,
                               int grid_size, RngStream& rng) {
  const int m = int(x_aug.cols());
  std::vector<int> perm = rng.permutation(m);
  Matrix x_perm(x_aug.rows(), m);
  for (int i = 0; i < m; ++i) x_perm.col(i) = x_aug.col(perm[i]);

  PathConfig cfg;
  cfg.grid_size = grid_size;
  LassoPath path = lasso_entry_path(x_perm, y, family, cfg);

  FeatureStats stats;
  stats.family = family;
  stats.lambda_grid = path.lambda_grid;
  stats.z = Vector::Zero(m);
  for (int i = 0; i < m; ++i) {
    const int k = path.entry_index[i];
    if (k >= 0) stats.z[perm[i]] = path.lambda_grid[k];
  }
  return stats;
}

Vector w_scores(const FeatureStats& stats) {
  const int m = int(stats.z.size());
  if (m % 2 != 0) throw std::invalid_argument("w_scores: z must have even length");
  const int p = m / 2;
  Vector w(p);
  for (int j = 0; j < p; ++j) {
    const double zj = stats.z[j], zk = stats.z[j + p];
    const double mag = std::max(zj, zk);
    w[j] = zj > zk ? mag : (zj < zk ? -mag : 0.0);
  }
  return w;
}

double knockoff_threshold(const Vector& w, double q, int offset) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("knockoff_threshold: q must be in (0,1)");
  if (offset != 0 && offset != 1)
    throw std::invalid_argument("knockoff_threshold: offset must be 0 or 1");
  std::vector<double> candidates;
  for (int j = 0; j < w.size(); ++j)
    if (w[j] != 0.0) candidates.push_back(std::abs(w[j]));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  for (double t : candidates) {
    long neg = 0, pos = 0;
    for (int j = 0; j < w.size(); ++j) {
      if (w[j] <= -t) ++neg;
      if (w[j] >= t) ++pos;
    }
    if (pos > 0 && double(offset + neg) / double(pos) <= q) return t;
  }
  return std::numeric_limits<double>::infinity();
}

std::pair<double, double> fdp_power(const std::vector<int>& selected,
                                    const std::vector<int>& truth, int p) {
  for (int j : selected)
    if (j < 0 || j >= p) throw std::invalid_argument("fdp_power: index out of range");
  std::vector<int> sel = selected, tru = truth;
  std::sort(sel.begin(), sel.end());
  std::sort(tru.begin(), tru.end());
  std::vector<int> hits;
  std::set_intersection(sel.begin(), sel.end(), tru.begin(), tru.end(),
                        std::back_inserter(hits));
  const double fdp =
      double(sel.size() - hits.size()) / double(std::max<std::size_t>(sel.size(), 1));
  const double power = double(hits.size()) / double(std::max<std::size_t>(tru.size(), 1));
  return {fdp, power};
}

KnockoffResult knockoff_filter(const Matrix& x, const Matrix& x_knockoff, const Vector& y,
                               Family family, double q, int offset, RngStream& rng,
                               const std::vector<int>& truth, int grid_size) {
  if (x.rows() != x_knockoff.rows() || x.cols() != x_knockoff.cols())
    throw std::invalid_argument("knockoff_filter: knockoff shape mismatch");
  const int p = int(x.cols());
  Matrix aug(x.rows(), 2 * p);
  aug << x, x_knockoff;

  KnockoffResult res;
  FeatureStats stats = lasso_entry_stats(aug, y, family, grid_size, rng);
  res.w = w_scores(stats);
  res.tau = knockoff_threshold(res.w, q, offset);
  for (int j = 0; j < p; ++j)
    if (res.w[j] >= res.tau) res.selected.push_back(j);
  auto [fdp, power] = fdp_power(res.selected, truth, p);
  res.fdp = fdp;
  res.power = power;
  return res;
}

}  // namespace tk
