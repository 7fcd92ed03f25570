#pragma once

#include <functional>
#include <map>
#include <vector>

#include "tk/tilting.hpp"

namespace tk {

// Gaussian conditional of coordinate j given the rest, precomputed from moments.
struct ConditionalLaw {
  int j = 0;
  Vector coef;       // regression weights on x_{-j}
  double mean0 = 0;  // mu_j - coef . mu_{-j}
  double sd = 0.0;
};

ConditionalLaw conditional_law(const TiltedMoments& moments, int j);

double conditional_gaussian_draw(const ConditionalLaw& law, const Vector& x_row,
                                 RngStream& rng);
double conditional_gaussian_draw(const TiltedMoments& moments, const Vector& x_row, int j,
                                 RngStream& rng);

// (1 + #{t_resampled >= t_observed}) / (K + 1); ties count as >=.
double rank_pvalue(double t_observed, const std::vector<double>& t_resampled);

struct CrtConfig {
  int j = 0;
  long resamples = 200;
  // statistic(x_j column, x_without_j, y); empty -> |x_j'(y - ybar)| / n
  std::function<double(const Vector&, const Matrix&, const Vector&)> statistic;
  // conditional-law moments per (y[,d]) group, matching the sample's keys
  std::map<GroupKey, TiltedMoments> resampler;
};

// Resamples column j from its per-group conditional K times and returns the rank
// p-value of the observed statistic among the resampled ones.
double crt_pvalue(const LabeledSample& sample, const CrtConfig& cfg, RngStream& rng);

}  // namespace tk
