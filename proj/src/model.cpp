#include "tk/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tk {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_transition(const Eigen::Matrix3d& t) {
  for (int i = 0; i < 3; ++i) {
    double row = 0.0;
    for (int j = 0; j < 3; ++j) {
      if (t(i, j) < 0.0 || t(i, j) > 1.0)
        throw std::invalid_argument("MarkovChain3: transition entries must lie in [0,1]");
      row += t(i, j);
    }
    if (std::abs(row - 1.0) > 1e-12)
      throw std::invalid_argument("MarkovChain3: transition rows must sum to 1");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// CovariateModel
// ---------------------------------------------------------------------------

CovariateModel::CovariateModel(GaussianBlock gb) : v_(std::move(gb)) {
  const auto& g = std::get<GaussianBlock>(v_);
  p_ = static_cast<int>(g.mu.size());
  if (p_ < 1) throw std::invalid_argument("CovariateModel: p must be >= 1");
  if (g.sigma.rows() != p_ || g.sigma.cols() != p_)
    throw std::invalid_argument("CovariateModel: sigma dimensions do not match mu");
  if ((g.sigma - g.sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("CovariateModel: sigma must be symmetric");
  Eigen::LLT<Matrix> llt(g.sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("CovariateModel: covariance decomposition failed (not PD)");
  chol_ = llt.matrixL();
}

CovariateModel::CovariateModel(MarkovChain3 mc) : v_(std::move(mc)) {
  const auto& m = std::get<MarkovChain3>(v_);
  p_ = m.p;
  if (p_ < 1) throw std::invalid_argument("CovariateModel: p must be >= 1");
  check_transition(m.transition);
}

Eigen::Vector3d CovariateModel::stationary() const {
  const auto& m = markov();
  // Solve pi' P = pi', sum(pi) = 1 via the augmented normal equations.
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
  a.block<3, 3>(0, 0) = m.transition.transpose() - Eigen::Matrix3d::Identity();
  a.row(3).head<3>().setOnes();
  Eigen::Vector4d b = Eigen::Vector4d::Zero();
  b[3] = 1.0;
  Eigen::Vector3d pi = (a.transpose() * a).ldlt().solve(a.transpose() * b).head<3>();
  return pi.cwiseMax(0.0) / pi.cwiseMax(0.0).sum();
}

Matrix CovariateModel::sample(int n, RngStream& rng) const {
  if (std::holds_alternative<GaussianBlock>(v_)) {
    const auto& g = gaussian();
    Matrix z = standard_normal_matrix(n, p_, rng);
    Matrix x = z * chol_.transpose();
    x.rowwise() += g.mu.transpose();
    return x;
  }
  const auto& m = markov();
  const Eigen::Vector3d pi = stationary();
  const double mean_state = m.centered ? (0.0 * pi[0] + 1.0 * pi[1] + 2.0 * pi[2]) : 0.0;
  Matrix x(n, p_);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    int s = u < pi[0] ? 0 : (u < pi[0] + pi[1] ? 1 : 2);
    x(i, 0) = s - mean_state;
    for (int j = 1; j < p_; ++j) {
      u = rng.uniform();
      const double p0 = m.transition(s, 0), p1 = m.transition(s, 1);
      s = u < p0 ? 0 : (u < p0 + p1 ? 1 : 2);
      x(i, j) = s - mean_state;
    }
  }
  return x;
}

void CovariateModel::population_moments(Vector& mu, Matrix& sigma) const {
  if (std::holds_alternative<GaussianBlock>(v_)) {
    mu = gaussian().mu;
    sigma = gaussian().sigma;
    return;
  }
  const auto& m = markov();
  const Eigen::Vector3d pi = stationary();
  const Eigen::Vector3d vals(0.0, 1.0, 2.0);
  const double mean_state = pi.dot(vals);
  mu = Vector::Constant(p_, m.centered ? 0.0 : mean_state);
  // Cov(X_a, X_b) depends only on k = |a-b| through the k-step transitions.
  std::vector<double> cov_lag(p_);
  Eigen::Matrix3d pk = Eigen::Matrix3d::Identity();
  for (int k = 0; k < p_; ++k) {
    double second = 0.0;
    for (int l = 0; l < 3; ++l)
      for (int r = 0; r < 3; ++r) second += pi[l] * pk(l, r) * vals[l] * vals[r];
    cov_lag[k] = second - mean_state * mean_state;
    pk = pk * m.transition;
  }
  sigma.resize(p_, p_);
  for (int a = 0; a < p_; ++a)
    for (int b = 0; b < p_; ++b) sigma(a, b) = cov_lag[std::abs(a - b)];
}

Matrix sample_covariates(const CovariateModel& model, int n, RngStream& rng) {
  return model.sample(n, rng);
}

// ---------------------------------------------------------------------------
// ResponseModel
// ---------------------------------------------------------------------------

ResponseModel::ResponseModel(LinearGaussian lg) : v_(std::move(lg)) {
  const auto& m = std::get<LinearGaussian>(v_);
  p_ = static_cast<int>(m.beta.size());
  if (!(m.noise_sd > 0)) throw std::invalid_argument("ResponseModel: noise_sd must be > 0");
}

ResponseModel::ResponseModel(LogisticResponse lr) : v_(std::move(lr)) {
  p_ = static_cast<int>(std::get<LogisticResponse>(v_).beta.size());
}

const Vector& ResponseModel::beta() const {
  if (std::holds_alternative<LinearGaussian>(v_)) return std::get<LinearGaussian>(v_).beta;
  return std::get<LogisticResponse>(v_).beta;
}

Vector ResponseModel::sample(const Matrix& x, RngStream& rng) const {
  if (x.cols() != p_) throw std::invalid_argument("sample_response: dimension mismatch");
  const long n = x.rows();
  Vector y(n);
  if (std::holds_alternative<LinearGaussian>(v_)) {
    const auto& m = std::get<LinearGaussian>(v_);
    Vector eta = x * m.beta;
    for (long i = 0; i < n; ++i) y[i] = eta[i] + m.noise_sd * rng.normal();
  } else {
    const auto& m = std::get<LogisticResponse>(v_);
    Vector eta = x * m.beta;
    for (long i = 0; i < n; ++i) y[i] = rng.bernoulli(sigmoid(eta[i])) ? 1.0 : 0.0;
  }
  return y;
}

Vector sample_response(const ResponseModel& model, const Matrix& x, RngStream& rng) {
  return model.sample(x, rng);
}

// ---------------------------------------------------------------------------
// SelectionModel
// ---------------------------------------------------------------------------

SelectionModel::SelectionModel(LogisticSelection ls) : v_(std::move(ls)) {
  p_ = static_cast<int>(std::get<LogisticSelection>(v_).gamma_x.size());
}

SelectionModel::SelectionModel(SquaredExponential se) : v_(std::move(se)) {
  p_ = static_cast<int>(std::get<SquaredExponential>(v_).gamma_x.size());
}

const Vector& SelectionModel::gamma_x() const {
  if (std::holds_alternative<LogisticSelection>(v_)) return std::get<LogisticSelection>(v_).gamma_x;
  return std::get<SquaredExponential>(v_).gamma_x;
}

double SelectionModel::gamma_y() const {
  if (std::holds_alternative<LogisticSelection>(v_)) return std::get<LogisticSelection>(v_).gamma_y;
  return std::get<SquaredExponential>(v_).gamma_y;
}

double SelectionModel::prob(const Vector& x_row, double y) const {
  if (x_row.size() != p_) throw std::invalid_argument("selection_prob: dimension mismatch");
  if (std::holds_alternative<LogisticSelection>(v_)) {
    const auto& m = std::get<LogisticSelection>(v_);
    return sigmoid(m.gamma0 + m.gamma_x.dot(x_row) + m.gamma_y * y);
  }
  const auto& m = std::get<SquaredExponential>(v_);
  const double v = m.gamma_x.dot(x_row) + m.gamma_y * y;
  return std::exp(-0.5 * v * v);
}

Vector SelectionModel::probs(const Matrix& x, const Vector& y) const {
  if (x.cols() != p_ || x.rows() != y.size())
    throw std::invalid_argument("selection_prob: dimension mismatch");
  if (std::holds_alternative<LogisticSelection>(v_)) {
    const auto& m = std::get<LogisticSelection>(v_);
    Vector eta = (x * m.gamma_x).array() + m.gamma_y * y.array() + m.gamma0;
    return eta.unaryExpr([](double z) { return sigmoid(z); });
  }
  const auto& m = std::get<SquaredExponential>(v_);
  Vector v = (x * m.gamma_x).array() + m.gamma_y * y.array();
  return (-0.5 * v.array().square()).exp();
}

double selection_prob(const SelectionModel& model, const Vector& x_row, double y) {
  return model.prob(x_row, y);
}

// ---------------------------------------------------------------------------
// Sample draws
// ---------------------------------------------------------------------------

namespace {

void copy_truth(const PopulationModel& pop, LabeledSample& s) {
  s.truth_beta_nonnull = pop.beta_nonnull;
  s.truth_gamma_nonnull = pop.gamma_nonnull;
}

}  // namespace

LabeledSample draw_case_control(const PopulationModel& pop, const CaseControlDesign& design,
                                RngStream& rng) {
  if (!pop.selection) throw std::invalid_argument("draw_case_control: population has no selection model");
  if (design.n_cases + design.n_controls > design.pool_size)
    throw std::invalid_argument("draw_case_control: strata sizes exceed pool size");
  const long n_pool = design.pool_size;
  const int p = pop.covariates.dim();

  Matrix x_pool = pop.covariates.sample(static_cast<int>(n_pool), rng);
  Vector y_pool = pop.response.sample(x_pool, rng);
  Vector pr = pop.selection->probs(x_pool, y_pool);
  std::vector<int> cases, controls;
  cases.reserve(n_pool / 4);
  controls.reserve(n_pool);
  for (long i = 0; i < n_pool; ++i) {
    if (rng.bernoulli(pr[i]))
      cases.push_back(static_cast<int>(i));
    else
      controls.push_back(static_cast<int>(i));
  }

  if (static_cast<long>(cases.size()) < design.n_cases) {
    std::ostringstream msg;
    msg << "draw_case_control: insufficient cases, need " << design.n_cases << " but the pool has "
        << cases.size();
    throw std::runtime_error(msg.str());
  }
  if (static_cast<long>(controls.size()) < design.n_controls) {
    std::ostringstream msg;
    msg << "draw_case_control: insufficient controls, need " << design.n_controls
        << " but the pool has " << controls.size();
    throw std::runtime_error(msg.str());
  }

  std::vector<int> take_case = rng.sample_without_replacement(static_cast<int>(cases.size()),
                                                              static_cast<int>(design.n_cases));
  std::vector<int> take_ctrl = rng.sample_without_replacement(static_cast<int>(controls.size()),
                                                              static_cast<int>(design.n_controls));
  const long n = design.n_cases + design.n_controls;
  LabeledSample s;
  s.x.resize(n, p);
  s.y.resize(n);
  Eigen::VectorXi d(n);
  long r = 0;
  for (int k : take_case) {
    s.x.row(r) = x_pool.row(cases[k]);
    s.y[r] = y_pool[cases[k]];
    d[r++] = 1;
  }
  for (int k : take_ctrl) {
    s.x.row(r) = x_pool.row(controls[k]);
    s.y[r] = y_pool[controls[k]];
    d[r++] = 0;
  }
  s.d = std::move(d);
  s.pool_size = n_pool;
  s.pool_cases = static_cast<long>(cases.size());
  s.pool_controls = static_cast<long>(controls.size());
  copy_truth(pop, s);
  return s;
}

LabeledSample draw_selected(const PopulationModel& pop, long n_pool, RngStream& rng) {
  if (!pop.selection) throw std::invalid_argument("draw_selected: population has no selection model");
  const int p = pop.covariates.dim();
  Matrix x_pool = pop.covariates.sample(static_cast<int>(n_pool), rng);
  Vector y_pool = pop.response.sample(x_pool, rng);
  Vector pr = pop.selection->probs(x_pool, y_pool);
  std::vector<int> keep;
  keep.reserve(n_pool);
  for (long i = 0; i < n_pool; ++i)
    if (rng.bernoulli(pr[i])) keep.push_back(static_cast<int>(i));
  if (keep.empty()) throw std::runtime_error("draw_selected: empty selection");
  LabeledSample s;
  s.x.resize(static_cast<long>(keep.size()), p);
  s.y.resize(static_cast<long>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    s.x.row(static_cast<long>(r)) = x_pool.row(keep[r]);
    s.y[static_cast<long>(r)] = y_pool[keep[r]];
  }
  s.pool_size = n_pool;
  copy_truth(pop, s);
  return s;
}

LabeledSample draw_iid(const PopulationModel& pop, long n, RngStream& rng) {
  LabeledSample s;
  s.x = pop.covariates.sample(static_cast<int>(n), rng);
  s.y = pop.response.sample(s.x, rng);
  s.pool_size = n;
  copy_truth(pop, s);
  return s;
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

namespace {

Matrix block_ar_covariance(int p, int block, double rho) {
  Matrix sigma = Matrix::Zero(p, p);
  for (int b0 = 0; b0 < p; b0 += block) {
    const int bs = std::min(block, p - b0);
    for (int i = 0; i < bs; ++i)
      for (int j = 0; j < bs; ++j) sigma(b0 + i, b0 + j) = std::pow(rho, std::abs(i - j));
  }
  return sigma;
}

/// Draws `count` non-null indices and N(0, sd^2) magnitudes into a p-vector.
Vector draw_sparse_coefficients(int p, int count, double sd, RngStream& rng,
                                std::vector<int>& nonnull, const std::vector<int>* exclude) {
  std::vector<int> candidates;
  if (exclude && !exclude->empty()) {
    std::set<int> ex(exclude->begin(), exclude->end());
    for (int j = 0; j < p; ++j)
      if (!ex.count(j)) candidates.push_back(j);
    if (static_cast<int>(candidates.size()) < count)
      throw std::invalid_argument("make_scenario: not enough indices for disjoint non-null sets");
    std::vector<int> pick = rng.sample_without_replacement(static_cast<int>(candidates.size()), count);
    nonnull.clear();
    for (int k : pick) nonnull.push_back(candidates[k]);
  } else {
    nonnull = rng.sample_without_replacement(p, count);
  }
  std::sort(nonnull.begin(), nonnull.end());
  Vector coef = Vector::Zero(p);
  for (int j : nonnull) coef[j] = sd * rng.normal();
  return coef;
}

long scaled_count(long base, double scale) {
  return std::max<long>(1, static_cast<long>(std::floor(static_cast<double>(base) * scale)));
}

}  // namespace

LabeledSample Scenario::draw(RngStream& rng) const {
  switch (kind) {
    case SamplingKind::CaseControl:
      return draw_case_control(pop, design, rng);
    case SamplingKind::Selected:
      return draw_selected(pop, n_pool, rng);
    case SamplingKind::Iid:
      return draw_iid(pop, n_pool, rng);
  }
  throw std::logic_error("Scenario::draw: unknown sampling kind");
}

Scenario make_scenario(const std::string& name, double scale, RngStream& rng,
                       const ScenarioOverrides& ov) {
  if (!(scale > 0.0) || scale > 1.0)
    throw std::invalid_argument("make_scenario: scale must lie in (0, 1]");
  const bool forbid_overlap = ov.forbid_overlap.value_or(false);

  if (name == "a1_exact" || name == "a2_noselect") {
    const int block = ov.block_size.value_or(10);
    int p = ov.p.value_or(std::max(block, static_cast<int>(std::floor(400 * scale / block)) * block));
    Matrix sigma = block_ar_covariance(p, block, 0.5);
    CovariateModel cov(GaussianBlock{Vector::Zero(p), std::move(sigma)});

    std::vector<int> beta_nn, gamma_nn;
    const int beta_count =
        ov.beta_nonnull_count.value_or(static_cast<int>(std::max(1.0, std::floor(0.10 * p + 0.5))));
    Vector beta =
        draw_sparse_coefficients(p, beta_count, ov.beta_sd.value_or(0.5), rng, beta_nn, nullptr);
    ResponseModel resp(LinearGaussian{std::move(beta), ov.noise_sd.value_or(1.0)});

    const int gamma_count =
        ov.gamma_nonnull_count.value_or(static_cast<int>(std::max(1.0, std::floor(0.20 * p + 0.5))));
    Vector gamma = draw_sparse_coefficients(p, gamma_count, ov.gamma_sd.value_or(0.5), rng,
                                            gamma_nn, forbid_overlap ? &beta_nn : nullptr);

    if (name == "a1_exact") {
      SelectionModel sel(SquaredExponential{std::move(gamma), ov.gamma_y.value_or(2.0)});
      CaseControlDesign design{ov.n_cases.value_or(scaled_count(2000, scale)),
                               ov.n_controls.value_or(scaled_count(2000, scale)),
                               ov.pool_size.value_or(scaled_count(40000, scale))};
      return Scenario{name, scale,
                      PopulationModel{std::move(cov), std::move(resp), std::move(sel), beta_nn,
                                      gamma_nn},
                      SamplingKind::CaseControl, design, 0, 10};
    }
    return Scenario{name, scale,
                    PopulationModel{std::move(cov), std::move(resp), std::nullopt, beta_nn, {}},
                    SamplingKind::Iid, CaseControlDesign{},
                    ov.pool_size.value_or(scaled_count(4000, scale)), 10};
  }

  if (name == "a3_second_order") {
    const int block = ov.block_size.value_or(10);
    int p = ov.p.value_or(std::max(block, static_cast<int>(std::floor(200 * scale / block)) * block));
    Matrix sigma = block_ar_covariance(p, block, 0.5);
    CovariateModel cov(GaussianBlock{Vector::Zero(p), std::move(sigma)});

    std::vector<int> beta_nn, gamma_nn;
    const int beta_count =
        ov.beta_nonnull_count.value_or(static_cast<int>(std::max(1.0, std::floor(0.10 * p + 0.5))));
    Vector beta = draw_sparse_coefficients(p, beta_count, ov.beta_sd.value_or(0.5), rng, beta_nn,
                                           nullptr);
    ResponseModel resp(LinearGaussian{std::move(beta), ov.noise_sd.value_or(1.0)});

    const int gamma_count =
        ov.gamma_nonnull_count.value_or(static_cast<int>(std::max(1.0, std::floor(0.20 * p + 0.5))));
    Vector gamma = draw_sparse_coefficients(p, gamma_count, ov.gamma_sd.value_or(0.25), rng,
                                            gamma_nn, forbid_overlap ? &beta_nn : nullptr);
    SelectionModel sel(
        LogisticSelection{ov.gamma0.value_or(-4.0), std::move(gamma), ov.gamma_y.value_or(2.0)});

    return Scenario{name, scale,
                    PopulationModel{std::move(cov), std::move(resp), std::move(sel), beta_nn,
                                    gamma_nn},
                    SamplingKind::Selected, CaseControlDesign{},
                    ov.pool_size.value_or(scaled_count(5000, scale)), 10};
  }

  if (name == "a4_markov_cc") {
    int p = ov.p.value_or(static_cast<int>(scaled_count(200, scale)));
    Eigen::Matrix3d t;
    t << 0.5, 0.3, 0.2,
         0.2, 0.5, 0.3,
         0.3, 0.2, 0.5;
    CovariateModel cov(MarkovChain3{t, p, true});

    std::vector<int> beta_nn, gamma_nn;
    const int beta_count =
        ov.beta_nonnull_count.value_or(static_cast<int>(scaled_count(40, scale)));
    Vector beta =
        draw_sparse_coefficients(p, beta_count, ov.beta_sd.value_or(0.4), rng, beta_nn, nullptr);
    ResponseModel resp(LogisticResponse{std::move(beta)});

    const int gamma_count =
        ov.gamma_nonnull_count.value_or(static_cast<int>(scaled_count(40, scale)));
    Vector gamma = draw_sparse_coefficients(p, gamma_count, ov.gamma_sd.value_or(0.4), rng,
                                            gamma_nn, forbid_overlap ? &beta_nn : nullptr);
    SelectionModel sel(
        LogisticSelection{ov.gamma0.value_or(-6.0), std::move(gamma), ov.gamma_y.value_or(2.0)});

    // The strata are fixed by design but the candidate pool is free. Cases run at
    // roughly 1-5% prevalence under gamma0=-6, so 100x the sample keeps the
    // case stratum comfortably stocked across the scale range.
    CaseControlDesign design{ov.n_cases.value_or(scaled_count(2000, scale)),
                             ov.n_controls.value_or(scaled_count(2000, scale)), 0};
    design.pool_size = ov.pool_size.value_or(100 * (design.n_cases + design.n_controls));
    return Scenario{name, scale,
                    PopulationModel{std::move(cov), std::move(resp), std::move(sel), beta_nn,
                                    gamma_nn},
                    SamplingKind::CaseControl, design, 0, 2};
  }

  throw std::invalid_argument("make_scenario: unknown scenario name '" + name + "'");
}

}  // namespace tk
