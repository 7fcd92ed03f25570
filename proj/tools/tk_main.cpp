// tk: tilted model-X knockoffs — simulation driver.
//
//   tk run --scenario a1 --scale 0.25 --methods no_adjustment,tilted_exact
//          --q 0.1,0.2,0.3 --reps 100 --seed 42 --out results.csv
//   tk summarize results.csv
//   tk crt-calibration --scenario a3 --reps 200 --resamples 200
//
// `run` also accepts --config FILE with a JSON object mirroring the flags
// (the "config" object of a results .meta.json works verbatim); explicit
// command-line flags override the file.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tk/simulate.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split_csv(text)) out.push_back(std::stod(item));
  return out;
}

void apply_json(const nlohmann::json& j, tk::ExperimentConfig& cfg) {
  if (j.contains("scenario")) cfg.scenario = j.at("scenario").get<std::string>();
  if (j.contains("scale")) cfg.scale = j.at("scale").get<double>();
  if (j.contains("methods")) {
    if (j.at("methods").is_string())
      cfg.methods = split_csv(j.at("methods").get<std::string>());
    else
      cfg.methods = j.at("methods").get<std::vector<std::string>>();
  }
  if (j.contains("q")) cfg.q_levels = j.at("q").get<std::vector<double>>();
  if (j.contains("reps")) cfg.replicates = j.at("reps").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("is_draws")) cfg.is_draws = j.at("is_draws").get<long>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (j.contains("y_bins")) cfg.y_bins = j.at("y_bins").get<int>();
  if (j.contains("two_stage_q")) cfg.two_stage_q = j.at("two_stage_q").get<double>();
  if (j.contains("offset")) cfg.knockoff_offset = j.at("offset").get<int>();
  if (j.contains("grid_size")) cfg.grid_size = j.at("grid_size").get<int>();
  if (j.contains("out")) cfg.output_path = j.at("out").get<std::string>();
  if (j.contains("overrides")) {
    const nlohmann::json& ov = j.at("overrides");
    tk::ScenarioOverrides& o = cfg.overrides;
    if (ov.contains("p")) o.p = ov.at("p").get<int>();
    if (ov.contains("n_cases")) o.n_cases = ov.at("n_cases").get<long>();
    if (ov.contains("n_controls")) o.n_controls = ov.at("n_controls").get<long>();
    if (ov.contains("pool_size")) o.pool_size = ov.at("pool_size").get<long>();
    if (ov.contains("gamma0")) o.gamma0 = ov.at("gamma0").get<double>();
    if (ov.contains("gamma_y")) o.gamma_y = ov.at("gamma_y").get<double>();
    if (ov.contains("beta_sd")) o.beta_sd = ov.at("beta_sd").get<double>();
    if (ov.contains("gamma_sd")) o.gamma_sd = ov.at("gamma_sd").get<double>();
    if (ov.contains("noise_sd")) o.noise_sd = ov.at("noise_sd").get<double>();
    if (ov.contains("beta_nonnull_count"))
      o.beta_nonnull_count = ov.at("beta_nonnull_count").get<int>();
    if (ov.contains("gamma_nonnull_count"))
      o.gamma_nonnull_count = ov.at("gamma_nonnull_count").get<int>();
    if (ov.contains("forbid_overlap")) o.forbid_overlap = ov.at("forbid_overlap").get<bool>();
    if (ov.contains("block_size")) o.block_size = ov.at("block_size").get<int>();
  }
}

int cmd_run(const tk::ExperimentConfig& cfg) {
  tk::validate_config(cfg);
  const std::vector<tk::ReplicateRecord> records = tk::run_experiment(cfg);
  std::cout << tk::summary_table(tk::aggregate(records));
  long failures = 0;
  for (const auto& r : records)
    if (r.failed) ++failures;
  if (failures > 0) {
    std::cerr << failures << " record(s) failed; first error: ";
    for (const auto& r : records)
      if (r.failed) {
        std::cerr << r.method << " rep " << r.rep << ": " << r.error << "\n";
        break;
      }
  }
  if (!cfg.output_path.empty()) {
    tk::write_csv(cfg.output_path, records);
    tk::write_metadata(cfg.output_path, cfg);
    std::cout << "wrote " << cfg.output_path << " and " << cfg.output_path << ".meta.json\n";
  }
  return 0;
}

int cmd_summarize(const std::string& path) {
  std::cout << tk::summary_table(tk::aggregate(tk::read_csv(path)));
  return 0;
}

int cmd_crt(const tk::CrtCalibrationConfig& cfg, const std::string& out_path) {
  const tk::CrtCalibrationResult res = tk::run_crt_calibration(cfg);
  const auto rate_below = [](const std::vector<double>& p, double alpha) {
    long c = 0;
    for (double v : p)
      if (v <= alpha) ++c;
    return double(c) / double(p.size());
  };
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s %6s %12s %12s\n", "method", "reps", "rate(p<=.05)",
                "rate(p<=.10)");
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "%-12s %6zu %12.4f %12.4f\n", "tilted", res.p_tilted.size(),
                rate_below(res.p_tilted, 0.05), rate_below(res.p_tilted, 0.10));
  std::cout << buf;
  if (!res.p_unadjusted.empty()) {
    std::snprintf(buf, sizeof(buf), "%-12s %6zu %12.4f %12.4f\n", "unadjusted",
                  res.p_unadjusted.size(), rate_below(res.p_unadjusted, 0.05),
                  rate_below(res.p_unadjusted, 0.10));
    std::cout << buf;
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << "rep,target,p_tilted,p_unadjusted\n";
    for (size_t i = 0; i < res.p_tilted.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%d,%.10g,", i, res.target_index[i], res.p_tilted[i]);
      out << buf;
      if (i < res.p_unadjusted.size())
        std::snprintf(buf, sizeof(buf), "%.10g\n", res.p_unadjusted[i]);
      else
        std::snprintf(buf, sizeof(buf), "nan\n");
      out << buf;
    }
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tilted model-X knockoffs under biased sampling"};
  app.require_subcommand(1);

  // run
  tk::ExperimentConfig cfg;
  std::string methods_csv = "no_adjustment";
  std::string q_csv = "0.1,0.2,0.3";
  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run a knockoff-filter experiment");
  run->add_option("--config", config_path, "JSON config file (flags override it)");
  CLI::Option* o_scenario =
      run->add_option("--scenario", cfg.scenario, "a1|a2|a3|a4 (or full names)");
  CLI::Option* o_scale = run->add_option("--scale", cfg.scale, "problem-size multiplier");
  CLI::Option* o_methods =
      run->add_option("--methods", methods_csv, "comma-separated method names");
  CLI::Option* o_q = run->add_option("--q", q_csv, "comma-separated FDR targets in (0,1)");
  CLI::Option* o_reps = run->add_option("--reps", cfg.replicates, "number of replicates");
  CLI::Option* o_seed = run->add_option("--seed", cfg.seed, "master RNG seed");
  CLI::Option* o_out = run->add_option("--out", cfg.output_path, "results CSV path");
  CLI::Option* o_is = run->add_option("--is-draws", cfg.is_draws,
                                      "importance-sampling draws per group (0 = auto)");
  CLI::Option* o_threads =
      run->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
  CLI::Option* o_bins =
      run->add_option("--y-bins", cfg.y_bins, "response bins for grouping (0 = scenario default)");
  CLI::Option* o_tsq =
      run->add_option("--two-stage-q", cfg.two_stage_q, "screening FDR level for two-stage fit");
  CLI::Option* o_offset = run->add_option("--offset", cfg.knockoff_offset,
                                          "knockoff threshold offset: 1 (knockoff+) or 0");
  CLI::Option* o_grid = run->add_option("--grid-size", cfg.grid_size, "lasso path grid size");

  // summarize
  std::string summarize_path;
  CLI::App* summarize = app.add_subcommand("summarize", "aggregate a results CSV");
  summarize->add_option("file", summarize_path, "results CSV written by `tk run`")->required();

  // crt-calibration
  tk::CrtCalibrationConfig ccfg;
  std::string crt_out;
  bool no_unadjusted = false;
  CLI::App* crt = app.add_subcommand("crt-calibration",
                                     "null p-value calibration of the conditional "
                                     "randomization test under biased sampling");
  crt->add_option("--scenario", ccfg.scenario, "a1|a2|a3|a4 (or full names)");
  crt->add_option("--scale", ccfg.scale, "problem-size multiplier");
  crt->add_option("--reps", ccfg.replicates, "number of replicates");
  crt->add_option("--resamples", ccfg.resamples, "CRT resamples per replicate");
  crt->add_option("--seed", ccfg.seed, "master RNG seed");
  crt->add_option("--y-bins", ccfg.y_bins, "response bins for grouping (0 = scenario default)");
  crt->add_option("--is-draws", ccfg.is_draws, "importance-sampling draws per group (0 = auto)");
  crt->add_option("--target", ccfg.target, "covariate index to test (-1 = first doubly-null)");
  crt->add_flag("--no-unadjusted", no_unadjusted, "skip the unadjusted comparison run");
  crt->add_option("--out", crt_out, "per-replicate p-value CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config file " + config_path);
        nlohmann::json j = nlohmann::json::parse(in);
        if (j.contains("config")) j = j.at("config");  // accept a .meta.json directly
        tk::ExperimentConfig from_file;
        apply_json(j, from_file);
        // a flag given on the command line beats the file; otherwise the file wins
        if (o_scenario->count() == 0) cfg.scenario = from_file.scenario;
        if (o_scale->count() == 0) cfg.scale = from_file.scale;
        if (o_methods->count() == 0) cfg.methods = from_file.methods;
        if (o_q->count() == 0) cfg.q_levels = from_file.q_levels;
        if (o_reps->count() == 0) cfg.replicates = from_file.replicates;
        if (o_seed->count() == 0) cfg.seed = from_file.seed;
        if (o_out->count() == 0) cfg.output_path = from_file.output_path;
        if (o_is->count() == 0) cfg.is_draws = from_file.is_draws;
        if (o_threads->count() == 0) cfg.threads = from_file.threads;
        if (o_bins->count() == 0) cfg.y_bins = from_file.y_bins;
        if (o_tsq->count() == 0) cfg.two_stage_q = from_file.two_stage_q;
        if (o_offset->count() == 0) cfg.knockoff_offset = from_file.knockoff_offset;
        if (o_grid->count() == 0) cfg.grid_size = from_file.grid_size;
        cfg.overrides = from_file.overrides;
      }
      if (o_methods->count() > 0 || config_path.empty()) cfg.methods = split_csv(methods_csv);
      if (o_q->count() > 0 || config_path.empty()) cfg.q_levels = parse_doubles(q_csv);
      return cmd_run(cfg);
    }
    if (summarize->parsed()) return cmd_summarize(summarize_path);
    if (crt->parsed()) {
      ccfg.include_unadjusted = !no_unadjusted;
      return cmd_crt(ccfg, crt_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
