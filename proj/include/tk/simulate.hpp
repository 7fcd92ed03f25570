#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tk/model.hpp"
#include "tk/rng.hpp"

namespace tk {

inline constexpr const char* kResultsSchemaVersion = "tk-results-v1";
inline constexpr const char* kToolVersion = "tk 1.0.0";

// Canonical method names, in registry order (also the per-replicate RNG keying):
//   no_adjustment, tilted_exact, tilted_so_known, tilted_so_logistic,
//   tilted_so_l1_cv, tilted_so_two_stage
std::string canonical_method_name(const std::string& name);
std::string canonical_scenario_name(const std::string& name);  // accepts a1..a4 shorthands

struct ExperimentConfig {
  std::string scenario = "a1_exact";
  double scale = 1.0;
  std::vector<std::string> methods{"no_adjustment"};
  std::vector<double> q_levels{0.1, 0.2, 0.3};
  int replicates = 100;
  std::uint64_t seed = 42;
  long is_draws = 0;        // importance-sampling draws per group; 0 -> 100 * dim rule
  int threads = 0;          // worker count; 0 -> hardware concurrency
  int y_bins = 0;           // continuous-response grouping bins; 0 -> scenario default
  double two_stage_q = 0.25;
  int knockoff_offset = 1;  // knockoff+ by default
  int grid_size = 100;
  std::string output_path;
  ScenarioOverrides overrides;
};

// Throws std::invalid_argument on malformed values or method/scenario mismatches.
void validate_config(const ExperimentConfig& cfg);

struct ReplicateRecord {
  std::string scenario;
  std::string method;
  int rep = 0;
  double q = 0.0;
  double fdp = 0.0;
  double power = 0.0;
  long n_selected = 0;
  double tau = 0.0;
  std::uint64_t seed = 0;  // the replicate's child stream seed
  double wall_ms = 0.0;
  bool failed = false;
  std::string error;
};

// One sample, every requested method on that same sample, one record per
// (method, q). Failures of a single method are recorded and do not abort.
std::vector<ReplicateRecord> run_replicate(const ExperimentConfig& cfg, int rep_index);

// One method's knockoff matrix for an already-drawn sample; the building block
// of run_replicate, exposed for diagnostics that need W rather than records.
Matrix make_method_knockoffs(const ExperimentConfig& cfg, const Scenario& scenario,
                             const LabeledSample& sample, const std::string& method,
                             RngStream& rng);

// Worker pool over replicates; output sorted by (rep, method, q) regardless of
// scheduling.
std::vector<ReplicateRecord> run_experiment(const ExperimentConfig& cfg);

struct SummaryRow {
  std::string scenario;
  std::string method;
  double q = 0.0;
  double mean_fdp = 0.0;
  double median_fdp = 0.0;
  double se_fdp = 0.0;
  double mean_power = 0.0;
  double se_power = 0.0;
  long replicates = 0;  // records that completed
  long failures = 0;
};

std::vector<SummaryRow> aggregate(const std::vector<ReplicateRecord>& records);
std::string summary_table(const std::vector<SummaryRow>& rows);

void write_csv(const std::string& path, const std::vector<ReplicateRecord>& records);
std::vector<ReplicateRecord> read_csv(const std::string& path);
void write_metadata(const std::string& csv_path, const ExperimentConfig& cfg);

struct CrtCalibrationConfig {
  std::string scenario = "a3_second_order";
  double scale = 0.05;
  int replicates = 500;
  long resamples = 200;
  std::uint64_t seed = 7;
  int y_bins = 0;
  long is_draws = 0;
  bool include_unadjusted = true;
  int target = -1;  // covariate index; -1 -> first doubly-null coordinate
};

struct CrtCalibrationResult {
  std::vector<double> p_tilted;
  std::vector<double> p_unadjusted;  // empty unless requested
  std::vector<int> target_index;     // per replicate
};

CrtCalibrationResult run_crt_calibration(const CrtCalibrationConfig& cfg);

}  // namespace tk
