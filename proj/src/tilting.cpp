#include "tk/tilting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace tk {

namespace {

double squared_mahalanobis(const Matrix& chol_lower, const Vector& v) {
  return chol_lower.triangularView<Eigen::Lower>().solve(v).squaredNorm();
}

}  // namespace

GaussianMixtureTilt exact_mixture_tilt(const Matrix& sigma, const Vector& gamma_x,
                                       double gamma_y, double y, double rate_case,
                                       double rate_control) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != gamma_x.size())
    throw std::invalid_argument("exact_mixture_tilt: dimension mismatch");
  if (!(rate_case > 0.0 && rate_case <= 1.0) || !(rate_control > 0.0 && rate_control <= 1.0))
    throw std::invalid_argument("exact_mixture_tilt: sampling rates must lie in (0, 1]");
  if (rate_case < rate_control)
    throw std::invalid_argument(
        "exact_mixture_tilt: invalid mixture weight, case sampling rate is below the control "
        "rate");

  GaussianMixtureTilt tilt;
  tilt.y = y;
  tilt.base_chol = cholesky_lower(sigma, "exact_mixture_tilt: sigma");

  const Vector sg = sigma * gamma_x;
  const double u = gamma_x.dot(sg);
  tilt.sigma_tilde = symmetrize(sigma - sg * sg.transpose() / (1.0 + u));
  tilt.mu_tilde = -(gamma_y * y) * (tilt.sigma_tilde * gamma_x);
  tilt.tilde_chol = cholesky_lower(tilt.sigma_tilde, "exact_mixture_tilt: sigma_tilde");

  // gamma_x' sigma_tilde gamma_x - 1 simplifies to -1 / (1 + u)
  tilt.w1_raw =
      (rate_case - rate_control) * std::exp(-0.5 * gamma_y * gamma_y * y * y / (1.0 + u));
  tilt.w2_raw = rate_control;
  return tilt;
}

double component_posterior_q1(const GaussianMixtureTilt& tilt, const Vector& x_row) {
  if (tilt.w1_raw == 0.0) return 0.0;
  if (tilt.w2_raw == 0.0) return 1.0;
  const double log1 =
      std::log(tilt.w1_raw) - 0.5 * squared_mahalanobis(tilt.tilde_chol, x_row - tilt.mu_tilde);
  const double log2 = std::log(tilt.w2_raw) - 0.5 * squared_mahalanobis(tilt.base_chol, x_row);
  const double diff = log2 - log1;  // q1 = 1 / (1 + exp(diff))
  if (diff >= 0.0) {
    const double t = std::exp(-diff);
    return t / (1.0 + t);
  }
  return 1.0 / (1.0 + std::exp(diff));
}

double component_prior_pi1(const GaussianMixtureTilt& tilt) {
  if (tilt.w1_raw == 0.0) return 0.0;
  if (tilt.w2_raw == 0.0) return 1.0;
  // integrating the kernels multiplies each weight by sqrt(det) of its covariance
  const double logit = std::log(tilt.w1_raw) + 0.5 * cholesky_logdet(tilt.tilde_chol) -
                       std::log(tilt.w2_raw) - 0.5 * cholesky_logdet(tilt.base_chol);
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double t = std::exp(logit);
  return t / (1.0 + t);
}

Vector sample_mixture_knockoff(const GaussianMixtureTilt& tilt, const Vector& x_row,
                               const GaussianKnockoffSpec& tilted_spec,
                               const GaussianKnockoffSpec& base_spec, RngStream& rng) {
  if (tilted_spec.p() != x_row.size() || base_spec.p() != x_row.size())
    throw std::invalid_argument("sample_mixture_knockoff: dimension mismatch");
  const double q1 = component_posterior_q1(tilt, x_row);
  if (rng.bernoulli(q1)) return sample_knockoff_row(tilted_spec, x_row, rng, &tilt.mu_tilde);
  return sample_knockoff_row(base_spec, x_row, rng);
}

TiltedMoments estimate_tilted_moments(const TiltSpec& spec, const GroupKey& key,
                                      RngStream& rng) {
  if (spec.base == nullptr || !spec.weight_fn)
    throw std::invalid_argument("estimate_tilted_moments: incomplete tilt spec");
  const int p = spec.base->dim();
  const long k = spec.mc_draws > 0
                     ? spec.mc_draws
                     : std::min<long>(std::max<long>(100L * p, 1000L), 1000000L);

  Matrix x = spec.base->sample(static_cast<int>(k), rng);
  Vector w(k);
  for (long i = 0; i < k; ++i) {
    const Vector xi = x.row(i).transpose();
    const double wi = spec.weight_fn(xi, key.y, key.d);
    if (!std::isfinite(wi) || wi < 0.0)
      throw std::invalid_argument("estimate_tilted_moments: weight function returned an invalid "
                                  "value");
    w[i] = wi;
  }
  const double sw = w.sum();
  if (sw == 0.0) throw std::runtime_error("degenerate tilt: all importance weights are zero");

  TiltedMoments out;
  out.key = key;
  out.draws = k;
  out.mu_hat = x.transpose() * w / sw;
  Matrix m2 = x.transpose() * w.asDiagonal() * x / sw;
  out.sigma_hat = m2 - out.mu_hat * out.mu_hat.transpose();
  out.ridge = ridge_regularize_to_pd(out.sigma_hat);
  out.ess = sw * sw / w.squaredNorm();
  out.low_ess_warning = out.ess < static_cast<double>(spec.ess_min);
  return out;
}

Vector discretize_quantiles(const Vector& y, int bins) {
  if (bins < 1) throw std::invalid_argument("discretize_quantiles: bins must be positive");
  const long n = y.size();
  if (n == 0) return y;

  std::vector<double> sorted(y.data(), y.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges(bins + 1);
  for (int b = 0; b <= bins; ++b)
    edges[b] = sorted[static_cast<size_t>((n - 1) * static_cast<long>(b) / bins)];

  Vector out(n);
  for (long i = 0; i < n; ++i) {
    const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, y[i]);
    const long b = it - (edges.begin() + 1);
    out[i] = 0.5 * (edges[b] + edges[b + 1]);
  }
  return out;
}

Matrix second_order_tilted_knockoffs(const LabeledSample& sample, const TiltSpec& spec,
                                     RngStream& rng,
                                     std::vector<TiltedMoments>* diagnostics) {
  if (spec.base == nullptr || !spec.weight_fn)
    throw std::invalid_argument("second_order_tilted_knockoffs: incomplete tilt spec");
  const long n = sample.n();
  const int p = sample.p();
  if (spec.base->dim() != p)
    throw std::invalid_argument("second_order_tilted_knockoffs: dimension mismatch");

  std::map<GroupKey, std::vector<long>> groups;
  for (long i = 0; i < n; ++i) {
    GroupKey key{sample.y[i], sample.d ? (*sample.d)[i] : -1};
    groups[key].push_back(i);
  }
  if (static_cast<int>(groups.size()) > spec.max_groups)
    throw std::invalid_argument(
        "second_order_tilted_knockoffs: response takes too many distinct values (" +
        std::to_string(groups.size()) + "); discretize it first");

  Matrix out(n, p);
  if (diagnostics) diagnostics->clear();
  std::uint64_t group_rank = 0;
  for (const auto& [key, rows] : groups) {
    RngStream group_rng = rng.child(group_rank++);
    TiltedMoments moments = estimate_tilted_moments(spec, key, group_rng);
    const Vector s = solve_s_equicorrelation(moments.sigma_hat);
    const GaussianKnockoffSpec kspec = build_spec(moments.mu_hat, moments.sigma_hat, s);
    for (long i : rows) {
      const Vector xi = sample.x.row(i).transpose();
      out.row(i) = sample_knockoff_row(kspec, xi, group_rng).transpose();
    }
    if (diagnostics) diagnostics->push_back(std::move(moments));
  }
  return out;
}

}  // namespace tk
