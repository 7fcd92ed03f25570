#include "tk/crt.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tk {

namespace {

Vector drop_coordinate(const Vector& v, int j) {
  Vector out(v.size() - 1);
  for (int i = 0, k = 0; i < v.size(); ++i)
    if (i != j) out[k++] = v[i];
  return out;
}

double default_statistic(const Vector& xj, const Matrix&, const Vector& y) {
  const Vector yc = y.array() - y.mean();
  return std::abs(xj.dot(yc) / double(xj.size()));
}

}  // namespace

ConditionalLaw conditional_law(const TiltedMoments& moments, int j) {
  const int p = static_cast<int>(moments.sigma_hat.rows());
  if (j < 0 || j >= p) throw std::invalid_argument("conditional_law: index out of range");

  ConditionalLaw law;
  law.j = j;
  if (p == 1) {
    law.coef = Vector();
    law.mean0 = moments.mu_hat[0];
    law.sd = std::sqrt(std::max(0.0, moments.sigma_hat(0, 0)));
    return law;
  }

  Matrix rest(p - 1, p - 1);
  Vector cross(p - 1);
  for (int a = 0, ra = 0; a < p; ++a) {
    if (a == j) continue;
    cross[ra] = moments.sigma_hat(a, j);
    for (int b = 0, rb = 0; b < p; ++b) {
      if (b == j) continue;
      rest(ra, rb++) = moments.sigma_hat(a, b);
    }
    ++ra;
  }

  Eigen::LLT<Matrix> llt(rest);
  if (llt.info() != Eigen::Success) {
    ridge_regularize_to_pd(rest);  // throws after escalation
    llt.compute(rest);
  }
  law.coef = llt.solve(cross);
  law.mean0 = moments.mu_hat[j] - law.coef.dot(drop_coordinate(moments.mu_hat, j));
  law.sd = std::sqrt(std::max(0.0, moments.sigma_hat(j, j) - cross.dot(law.coef)));
  return law;
}

double conditional_gaussian_draw(const ConditionalLaw& law, const Vector& x_row,
                                 RngStream& rng) {
  const double mean = law.mean0 + (law.coef.size() > 0
                                       ? law.coef.dot(drop_coordinate(x_row, law.j))
                                       : 0.0);
  return mean + law.sd * rng.normal();
}

double conditional_gaussian_draw(const TiltedMoments& moments, const Vector& x_row, int j,
                                 RngStream& rng) {
  return conditional_gaussian_draw(conditional_law(moments, j), x_row, rng);
}

double rank_pvalue(double t_observed, const std::vector<double>& t_resampled) {
  long count = 0;
  for (double t : t_resampled) count += t >= t_observed;
  return double(1 + count) / double(t_resampled.size() + 1);
}

double crt_pvalue(const LabeledSample& sample, const CrtConfig& cfg, RngStream& rng) {
  const long n = sample.n();
  const int p = sample.p();
  if (cfg.j < 0 || cfg.j >= p) throw std::invalid_argument("crt_pvalue: index out of range");
  if (cfg.resamples < 0) throw std::invalid_argument("crt_pvalue: negative resample count");

  Matrix x_rest(n, p - 1);
  for (int a = 0, r = 0; a < p; ++a) {
    if (a == cfg.j) continue;
    x_rest.col(r++) = sample.x.col(a);
  }

  const auto stat = cfg.statistic
                        ? cfg.statistic
                        : std::function<double(const Vector&, const Matrix&, const Vector&)>(
                              default_statistic);
  const double t_obs = stat(sample.x.col(cfg.j), x_rest, sample.y);
  if (!std::isfinite(t_obs)) throw std::runtime_error("crt_pvalue: statistic non-finite");
  if (cfg.resamples == 0) return 1.0;

  // conditional mean and sd per row, grouped the same way as the knockoff tilting
  Vector cond_mean(n), cond_sd(n);
  std::map<GroupKey, ConditionalLaw> laws;
  for (long i = 0; i < n; ++i) {
    const GroupKey key{sample.y[i], sample.d ? (*sample.d)[i] : -1};
    auto it = laws.find(key);
    if (it == laws.end()) {
      const auto mit = cfg.resampler.find(key);
      if (mit == cfg.resampler.end())
        throw std::invalid_argument("crt_pvalue: resampler has no moments for group y=" +
                                    std::to_string(key.y));
      it = laws.emplace(key, conditional_law(mit->second, cfg.j)).first;
    }
    const ConditionalLaw& law = it->second;
    const Vector xi = sample.x.row(i).transpose();
    cond_mean[i] =
        law.mean0 + (law.coef.size() > 0 ? law.coef.dot(drop_coordinate(xi, cfg.j)) : 0.0);
    cond_sd[i] = law.sd;
  }

  std::vector<double> t_res(static_cast<size_t>(cfg.resamples));
  Vector xj(n);
  for (long k = 0; k < cfg.resamples; ++k) {
    for (long i = 0; i < n; ++i) xj[i] = cond_mean[i] + cond_sd[i] * rng.normal();
    const double t = stat(xj, x_rest, sample.y);
    if (!std::isfinite(t)) throw std::runtime_error("crt_pvalue: statistic non-finite");
    t_res[static_cast<size_t>(k)] = t;
  }
  return rank_pvalue(t_obs, t_res);
}

}  // namespace tk
