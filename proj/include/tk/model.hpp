#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tk/linalg.hpp"
#include "tk/rng.hpp"

namespace tk {

// ---------------------------------------------------------------------------
// Covariate laws
// ---------------------------------------------------------------------------

struct GaussianBlock {
  Vector mu;
  Matrix sigma;
};

/// Three-state chain over the variable index; states take values {0, 1, 2}
/// and the first state is drawn from the stationary distribution. When
/// `centered`, the exact stationary mean is subtracted from every column so
/// the covariate law is identical across replicates.
struct MarkovChain3 {
  Eigen::Matrix3d transition;
  int p = 0;
  bool centered = true;
};

class CovariateModel {
 public:
  explicit CovariateModel(GaussianBlock gb);
  explicit CovariateModel(MarkovChain3 mc);

  int dim() const { return p_; }
  bool is_markov() const { return std::holds_alternative<MarkovChain3>(v_); }
  const GaussianBlock& gaussian() const { return std::get<GaussianBlock>(v_); }
  const MarkovChain3& markov() const { return std::get<MarkovChain3>(v_); }

  Matrix sample(int n, RngStream& rng) const;

  /// Exact first two moments of one row.
  void population_moments(Vector& mu, Matrix& sigma) const;

  /// Stationary distribution of the chain (Markov variant only).
  Eigen::Vector3d stationary() const;

 private:
  std::variant<GaussianBlock, MarkovChain3> v_;
  int p_ = 0;
  Matrix chol_;  // Gaussian variant: lower factor of sigma
};

// ---------------------------------------------------------------------------
// Response and selection laws
// ---------------------------------------------------------------------------

struct LinearGaussian {
  Vector beta;
  double noise_sd = 1.0;
};

struct LogisticResponse {
  Vector beta;
};

class ResponseModel {
 public:
  explicit ResponseModel(LinearGaussian lg);
  explicit ResponseModel(LogisticResponse lr);

  int dim() const { return p_; }
  bool is_binary() const { return std::holds_alternative<LogisticResponse>(v_); }
  const Vector& beta() const;

  Vector sample(const Matrix& x, RngStream& rng) const;

 private:
  std::variant<LinearGaussian, LogisticResponse> v_;
  int p_ = 0;
};

struct LogisticSelection {
  double gamma0 = 0.0;
  Vector gamma_x;
  double gamma_y = 0.0;
};

/// exp(-v^2/2) with v = x'gamma_x + y*gamma_y.
struct SquaredExponential {
  Vector gamma_x;
  double gamma_y = 0.0;
};

class SelectionModel {
 public:
  explicit SelectionModel(LogisticSelection ls);
  explicit SelectionModel(SquaredExponential se);

  int dim() const { return p_; }
  const Vector& gamma_x() const;
  double gamma_y() const;
  bool is_squared_exponential() const { return std::holds_alternative<SquaredExponential>(v_); }
  const SquaredExponential& squared_exponential() const { return std::get<SquaredExponential>(v_); }
  const LogisticSelection& logistic() const { return std::get<LogisticSelection>(v_); }

  /// P(S=1 | x, y), or P(D=1 | x, y) in case-control use.
  double prob(const Vector& x_row, double y) const;

  /// Row-wise probabilities for a whole sample.
  Vector probs(const Matrix& x, const Vector& y) const;

 private:
  std::variant<LogisticSelection, SquaredExponential> v_;
  int p_ = 0;
};

double selection_prob(const SelectionModel& model, const Vector& x_row, double y);

// ---------------------------------------------------------------------------
// Population, samples, designs
// ---------------------------------------------------------------------------

struct PopulationModel {
  CovariateModel covariates;
  ResponseModel response;
  std::optional<SelectionModel> selection;
  std::vector<int> beta_nonnull;   // 0-based indices
  std::vector<int> gamma_nonnull;  // 0-based indices
};

struct CaseControlDesign {
  long n_cases = 0;
  long n_controls = 0;
  long pool_size = 0;
};

struct LabeledSample {
  Matrix x;
  Vector y;
  std::optional<Eigen::VectorXi> d;  // case-control status, when designed
  std::vector<int> truth_beta_nonnull;
  std::vector<int> truth_gamma_nonnull;

  // Sampling metadata needed by the tilting machinery.
  long pool_size = 0;
  long pool_cases = -1;    // #{D=1} in the pool (case-control draws)
  long pool_controls = -1; // #{D=0} in the pool

  long n() const { return x.rows(); }
  int p() const { return static_cast<int>(x.cols()); }
  long sample_cases() const { return d ? static_cast<long>((d->array() == 1).count()) : 0; }

  /// n1 / #{D=1 in pool} and n0 / #{D=0 in pool}; defined for case-control draws.
  double rate_case() const { return static_cast<double>(sample_cases()) / static_cast<double>(pool_cases); }
  double rate_control() const {
    return static_cast<double>(n() - sample_cases()) / static_cast<double>(pool_controls);
  }
  /// Fraction of cases in the pool, used as the population prevalence.
  double pool_prevalence() const { return static_cast<double>(pool_cases) / static_cast<double>(pool_size); }
};

Matrix sample_covariates(const CovariateModel& model, int n, RngStream& rng);
Vector sample_response(const ResponseModel& model, const Matrix& x, RngStream& rng);

/// Draws `design.pool_size` triples (X, Y, D) from the population, then
/// subsamples the requested strata without replacement. Cases come first in
/// the returned rows. Throws when a stratum falls short, naming the shortfall.
LabeledSample draw_case_control(const PopulationModel& pop, const CaseControlDesign& design,
                                RngStream& rng);

/// Draws n_pool triples and keeps rows with S=1 (pool order preserved).
LabeledSample draw_selected(const PopulationModel& pop, long n_pool, RngStream& rng);

/// Draws n rows i.i.d. from the population, ignoring any selection model.
LabeledSample draw_iid(const PopulationModel& pop, long n, RngStream& rng);

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

enum class SamplingKind { CaseControl, Selected, Iid };

/// Optional overrides for the embedded scenario constants (JSON-configurable
/// through the CLI).
struct ScenarioOverrides {
  std::optional<int> p;
  std::optional<long> n_cases, n_controls, pool_size;
  std::optional<double> gamma0, gamma_y, beta_sd, gamma_sd, noise_sd;
  std::optional<int> beta_nonnull_count, gamma_nonnull_count;
  std::optional<bool> forbid_overlap;  // gamma non-nulls disjoint from beta non-nulls
  std::optional<int> block_size;
};

struct Scenario {
  std::string name;
  double scale = 1.0;
  PopulationModel pop;
  SamplingKind kind = SamplingKind::Iid;
  CaseControlDesign design;  // CaseControl kind
  long n_pool = 0;           // Selected / Iid kinds
  int default_y_bins = 10;   // grouping for continuous responses

  LabeledSample draw(RngStream& rng) const;
};

/// Instantiates one of the four simulation protocols (a1_exact, a2_noselect,
/// a3_second_order, a4_markov_cc) with counts and dimensions scaled by
/// `scale`. Coefficient patterns and magnitudes are drawn from `rng`.
Scenario make_scenario(const std::string& name, double scale, RngStream& rng,
                       const ScenarioOverrides& ov = {});

}  // namespace tk
