#include "tk/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "tk/crt.hpp"
#include "tk/gaussian_knockoff.hpp"
#include "tk/knockoff_filter.hpp"
#include "tk/logistic.hpp"
#include "tk/tilting.hpp"

namespace tk {

namespace {

enum class Method {
  NoAdjustment = 0,
  TiltedExact,
  SoKnown,
  SoLogistic,
  SoL1Cv,
  SoTwoStage,
};

const std::vector<std::pair<std::string, Method>> kMethodRegistry = {
    {"no_adjustment", Method::NoAdjustment},
    {"tilted_exact", Method::TiltedExact},
    {"tilted_so_known", Method::SoKnown},
    {"tilted_so_logistic", Method::SoLogistic},
    {"tilted_so_l1_cv", Method::SoL1Cv},
    {"tilted_so_two_stage", Method::SoTwoStage},
};

Method method_of(const std::string& canonical) {
  for (const auto& [name, m] : kMethodRegistry)
    if (name == canonical) return m;
  throw std::invalid_argument("unknown method: " + canonical);
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

SamplingKind kind_of_scenario(const std::string& canonical) {
  if (canonical == "a1_exact" || canonical == "a4_markov_cc") return SamplingKind::CaseControl;
  if (canonical == "a3_second_order") return SamplingKind::Selected;
  return SamplingKind::Iid;
}

}  // namespace

std::string canonical_method_name(const std::string& name) {
  static const std::map<std::string, std::string> aliases = {
      {"tilted_second_order_known", "tilted_so_known"},
      {"tilted_second_order_estimated_logistic", "tilted_so_logistic"},
      {"tilted_second_order_estimated_l1_cv", "tilted_so_l1_cv"},
      {"tilted_second_order_estimated_two_stage", "tilted_so_two_stage"},
  };
  const auto alias = aliases.find(name);
  const std::string resolved = alias != aliases.end() ? alias->second : name;
  for (const auto& [canonical, m] : kMethodRegistry)
    if (canonical == resolved) return canonical;
  std::string valid;
  for (const auto& [canonical, m] : kMethodRegistry) valid += " " + canonical;
  throw std::invalid_argument("unknown method '" + name + "'; valid:" + valid);
}

std::string canonical_scenario_name(const std::string& name) {
  static const std::map<std::string, std::string> names = {
      {"a1", "a1_exact"},          {"a1_exact", "a1_exact"},
      {"a2", "a2_noselect"},       {"a2_noselect", "a2_noselect"},
      {"a3", "a3_second_order"},   {"a3_second_order", "a3_second_order"},
      {"a4", "a4_markov_cc"},      {"a4_markov_cc", "a4_markov_cc"},
  };
  const auto it = names.find(name);
  if (it == names.end())
    throw std::invalid_argument("unknown scenario '" + name + "'; valid: a1 a2 a3 a4");
  return it->second;
}

void validate_config(const ExperimentConfig& cfg) {
  const std::string scen = canonical_scenario_name(cfg.scenario);
  if (cfg.methods.empty()) throw std::invalid_argument("config: no methods requested");
  if (cfg.q_levels.empty()) throw std::invalid_argument("config: no q levels requested");
  for (double q : cfg.q_levels)
    if (!(q > 0.0 && q < 1.0))
      throw std::invalid_argument("config: q levels must lie strictly inside (0,1)");
  if (cfg.replicates < 1) throw std::invalid_argument("config: replicates must be >= 1");
  if (!(cfg.scale > 0.0)) throw std::invalid_argument("config: scale must be positive");
  if (cfg.knockoff_offset != 0 && cfg.knockoff_offset != 1)
    throw std::invalid_argument("config: knockoff offset must be 0 or 1");
  if (cfg.grid_size < 2) throw std::invalid_argument("config: grid size must be >= 2");
  if (!(cfg.two_stage_q > 0.0 && cfg.two_stage_q < 1.0))
    throw std::invalid_argument("config: two-stage screening q must lie inside (0,1)");
  if (cfg.is_draws < 0 || cfg.y_bins < 0 || cfg.threads < 0)
    throw std::invalid_argument("config: counts must be non-negative");

  const SamplingKind kind = kind_of_scenario(scen);
  for (const std::string& name : cfg.methods) {
    const Method m = method_of(canonical_method_name(name));
    if (m == Method::TiltedExact && scen != "a1_exact")
      throw std::invalid_argument(
          "tilted_exact requires the squared-exponential case-control scenario (a1)");
    if ((m == Method::SoLogistic || m == Method::SoL1Cv || m == Method::SoTwoStage) &&
        kind != SamplingKind::CaseControl)
      throw std::invalid_argument("method '" + canonical_method_name(name) +
                                  "' needs case-control labels (scenarios a1 or a4)");
  }
}

namespace {

struct ReplicateContext {
  const ExperimentConfig& cfg;
  const Scenario& sc;
  const LabeledSample& s;
  Vector mu_pop;
  Matrix sigma_pop;
  Family family = Family::Gaussian;
  Vector group_y;  // binned when the response is continuous
  bool binary_response = false;
  std::optional<GaussianKnockoffSpec> pop_spec;

  const GaussianKnockoffSpec& population_spec() {
    if (!pop_spec)
      pop_spec = build_spec(mu_pop, sigma_pop, solve_s_equicorrelation(sigma_pop));
    return *pop_spec;
  }
};

// Sampling weight of one unit given (x, y[, d]), with true selection parameters.
std::function<double(const Vector&, double, int)> known_weight_fn(ReplicateContext& ctx) {
  if (!ctx.sc.pop.selection) {
    return [](const Vector&, double, int) { return 1.0; };
  }
  const SelectionModel& sel = *ctx.sc.pop.selection;
  if (ctx.sc.kind == SamplingKind::Selected) {
    return [&sel](const Vector& x, double y, int) { return sel.prob(x, y); };
  }
  if (ctx.binary_response) {  // case-control on D given (x, y): Q_{y,d}
    return [&sel](const Vector& x, double y, int d) {
      const double pr = sel.prob(x, y);
      return d == 1 ? pr : 1.0 - pr;
    };
  }
  // case-control on the selection event itself, response continuous: tilt by the
  // marginal inclusion probability, matching the exact-mixture target
  const double rc = ctx.s.rate_case(), r0 = ctx.s.rate_control();
  return [&sel, rc, r0](const Vector& x, double y, int) {
    return r0 + (rc - r0) * sel.prob(x, y);
  };
}

// Same structure with P(D=1|x,y) replaced by an estimated, intercept-adjusted fit.
std::function<double(const Vector&, double, int)> estimated_weight_fn(ReplicateContext& ctx,
                                                                      const LogisticFit& fit) {
  const int p = ctx.s.p();
  const auto phat = [fit, p](const Vector& x, double y) {
    return sigmoid(fit.intercept + fit.coef.head(p).dot(x) + fit.coef[p] * y);
  };
  if (ctx.binary_response) {
    return [phat](const Vector& x, double y, int d) {
      const double pr = phat(x, y);
      return d == 1 ? pr : 1.0 - pr;
    };
  }
  const double rc = ctx.s.rate_case(), r0 = ctx.s.rate_control();
  return [phat, rc, r0](const Vector& x, double y, int) {
    return r0 + (rc - r0) * phat(x, y);
  };
}

LogisticFit estimate_selection_fit(ReplicateContext& ctx, Method m, RngStream& rng) {
  const LabeledSample& s = ctx.s;
  const long n = s.n();
  const int p = s.p();
  Vector d01 = s.d->cast<double>();

  LogisticFit fit;
  if (m == Method::SoTwoStage) {
    fit = two_stage_selection_model(s.x, s.y, d01, ctx.cfg.two_stage_q, ctx.population_spec(),
                                    rng);
  } else {
    Matrix design(n, p + 1);
    design.leftCols(p) = s.x;
    design.col(p) = s.y;
    if (m == Method::SoLogistic) {
      fit = fit_logistic(design, d01, 0.0);
    } else {
      Matrix ds;
      Vector mean, scale;
      standardize_columns(design, ds, mean, scale);
      const Vector dc = d01.array() - d01.mean();
      const double lam_max =
          std::max(((ds.transpose() * dc) / double(n)).lpNorm<Eigen::Infinity>(), 1e-12);
      const int grid_n = 20;
      Vector grid(grid_n);
      const double ratio = std::pow(1e-2, 1.0 / (grid_n - 1));
      grid[0] = lam_max;
      for (int g = 1; g < grid_n; ++g) grid[g] = grid[g - 1] * ratio;
      const double lambda = cross_validate_lambda(design, d01, grid, 5, rng);
      fit = fit_logistic(design, d01, lambda);
    }
  }
  return adjust_intercept(
      fit, {double(s.sample_cases()) / double(n), s.pool_prevalence()});
}

Matrix method_knockoffs(ReplicateContext& ctx, Method m, RngStream& rng) {
  const LabeledSample& s = ctx.s;
  const long n = s.n();
  const int p = s.p();

  if (m == Method::NoAdjustment) return sample_knockoffs(ctx.population_spec(), s.x, rng);

  if (m == Method::TiltedExact) {
    const SelectionModel& sel = *ctx.sc.pop.selection;
    const Vector& gx = sel.gamma_x();
    const double gy = sel.gamma_y();
    const double rc = s.rate_case(), r0 = s.rate_control();

    GaussianMixtureTilt tilt = exact_mixture_tilt(ctx.sigma_pop, gx, gy, 0.0, rc, r0);
    const Vector mean_shift = -gy * (tilt.sigma_tilde * gx);  // mu_tilde(y) = y * mean_shift
    const double u = gx.dot(ctx.sigma_pop * gx);
    const double exponent = -0.5 * gy * gy / (1.0 + u);  // w1_raw(y) = dr * exp(exponent y^2)
    const GaussianKnockoffSpec tilted_spec = build_spec(
        Vector::Zero(p), tilt.sigma_tilde, solve_s_equicorrelation(tilt.sigma_tilde));
    const GaussianKnockoffSpec& base_spec = ctx.population_spec();

    Matrix xt(n, p);
    for (long i = 0; i < n; ++i) {
      const double y = s.y[i];
      tilt.y = y;
      tilt.mu_tilde = y * mean_shift;
      tilt.w1_raw = (rc - r0) * std::exp(exponent * y * y);
      const Vector xi = s.x.row(i).transpose();
      xt.row(i) = sample_mixture_knockoff(tilt, xi, tilted_spec, base_spec, rng).transpose();
    }
    return xt;
  }

  // second-order variants: group by (y[,d]) and sample per-group Gaussian knockoffs
  std::function<double(const Vector&, double, int)> weight;
  if (m == Method::SoKnown) {
    weight = known_weight_fn(ctx);
  } else {
    const LogisticFit fit = estimate_selection_fit(ctx, m, rng);
    weight = estimated_weight_fn(ctx, fit);
  }

  LabeledSample grp;
  grp.x = s.x;
  grp.y = ctx.group_y;
  if (ctx.binary_response && s.d) grp.d = s.d;  // (y, d) groups; otherwise y-only

  TiltSpec tspec;
  tspec.base = &ctx.sc.pop.covariates;
  tspec.weight_fn = weight;
  tspec.mc_draws = ctx.cfg.is_draws;
  return second_order_tilted_knockoffs(grp, tspec, rng);
}

}  // namespace

Matrix make_method_knockoffs(const ExperimentConfig& cfg, const Scenario& scenario,
                             const LabeledSample& sample, const std::string& method,
                             RngStream& rng) {
  ReplicateContext ctx{cfg, scenario, sample};
  scenario.pop.covariates.population_moments(ctx.mu_pop, ctx.sigma_pop);
  ctx.binary_response = scenario.pop.response.is_binary();
  ctx.family = ctx.binary_response ? Family::Binomial : Family::Gaussian;
  const int bins = cfg.y_bins > 0 ? cfg.y_bins : scenario.default_y_bins;
  ctx.group_y = ctx.binary_response ? sample.y : discretize_quantiles(sample.y, bins);
  return method_knockoffs(ctx, method_of(canonical_method_name(method)), rng);
}

std::vector<ReplicateRecord> run_replicate(const ExperimentConfig& cfg, int rep_index) {
  validate_config(cfg);
  const std::string scen = canonical_scenario_name(cfg.scenario);
  std::vector<std::string> methods;
  for (const std::string& name : cfg.methods) methods.push_back(canonical_method_name(name));

  RngStream master(cfg.seed);
  RngStream rep_rng = master.child(static_cast<std::uint64_t>(rep_index));
  const std::uint64_t rep_seed = rep_rng.seed();

  std::vector<ReplicateRecord> records;
  const auto failed_record = [&](const std::string& method, double q, const std::string& why) {
    ReplicateRecord r;
    r.scenario = scen;
    r.method = method;
    r.rep = rep_index;
    r.q = q;
    r.fdp = r.power = r.tau = std::numeric_limits<double>::quiet_NaN();
    r.n_selected = -1;
    r.seed = rep_seed;
    r.failed = true;
    r.error = why;
    return r;
  };

  std::optional<Scenario> sc;
  LabeledSample s;
  try {
    RngStream scen_rng = rep_rng.child(0);
    sc.emplace(make_scenario(scen, cfg.scale, scen_rng, cfg.overrides));
    RngStream draw_rng = rep_rng.child(1);
    s = sc->draw(draw_rng);
  } catch (const std::exception& e) {
    for (const std::string& m : methods)
      for (double q : cfg.q_levels) records.push_back(failed_record(m, q, e.what()));
    return records;
  }

  ReplicateContext ctx{cfg, *sc, s};
  sc->pop.covariates.population_moments(ctx.mu_pop, ctx.sigma_pop);
  ctx.binary_response = sc->pop.response.is_binary();
  ctx.family = ctx.binary_response ? Family::Binomial : Family::Gaussian;
  const int bins = cfg.y_bins > 0 ? cfg.y_bins : sc->default_y_bins;
  ctx.group_y = ctx.binary_response ? s.y : discretize_quantiles(s.y, bins);

  const int p = s.p();
  for (size_t mi = 0; mi < methods.size(); ++mi) {
    const Method m = method_of(methods[mi]);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      RngStream mrng = rep_rng.child(2 + static_cast<std::uint64_t>(m));
      Matrix xt = method_knockoffs(ctx, m, mrng);
      Matrix aug(s.n(), 2 * p);
      aug.leftCols(p) = s.x;
      aug.rightCols(p) = xt;
      FeatureStats stats = lasso_entry_stats(aug, s.y, ctx.family, cfg.grid_size, mrng);
      const Vector w = w_scores(stats);
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      for (double q : cfg.q_levels) {
        const double tau = knockoff_threshold(w, q, cfg.knockoff_offset);
        std::vector<int> selected;
        for (int j = 0; j < p; ++j)
          if (w[j] >= tau) selected.push_back(j);
        const auto [fdp, power] = fdp_power(selected, s.truth_beta_nonnull, p);
        ReplicateRecord r;
        r.scenario = scen;
        r.method = methods[mi];
        r.rep = rep_index;
        r.q = q;
        r.fdp = fdp;
        r.power = power;
        r.n_selected = static_cast<long>(selected.size());
        r.tau = tau;
        r.seed = rep_seed;
        r.wall_ms = ms;
        records.push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      for (double q : cfg.q_levels) records.push_back(failed_record(methods[mi], q, e.what()));
    }
  }
  return records;
}

std::vector<ReplicateRecord> run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const int reps = cfg.replicates;
  std::vector<std::vector<ReplicateRecord>> slots(static_cast<size_t>(reps));

  int workers = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, reps));

  std::atomic<int> next{0};
  const auto work = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= reps) break;
      slots[static_cast<size_t>(r)] = run_replicate(cfg, r);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::vector<ReplicateRecord> records;
  for (auto& slot : slots)
    for (auto& r : slot) records.push_back(std::move(r));
  std::sort(records.begin(), records.end(),
            [](const ReplicateRecord& a, const ReplicateRecord& b) {
              return std::tie(a.rep, a.method, a.q) < std::tie(b.rep, b.method, b.q);
            });
  return records;
}

std::vector<SummaryRow> aggregate(const std::vector<ReplicateRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::map<std::tuple<std::string, std::string, double>,
           std::pair<std::vector<double>, std::vector<double>>>
      cells;  // (fdp list, power list)
  std::map<std::tuple<std::string, std::string, double>, long> failures;
  for (const ReplicateRecord& r : records) {
    const auto key = std::make_tuple(r.scenario, r.method, r.q);
    if (r.failed) {
      ++failures[key];
      cells.try_emplace(key);
      continue;
    }
    auto& cell = cells[key];
    cell.first.push_back(r.fdp);
    cell.second.push_back(r.power);
  }

  const auto mean_of = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / double(v.size());
  };
  const auto se_of = [&](const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / double(v.size() - 1) / double(v.size()));
  };

  std::vector<SummaryRow> rows;
  for (const auto& [key, cell] : cells) {
    SummaryRow row;
    row.scenario = std::get<0>(key);
    row.method = std::get<1>(key);
    row.q = std::get<2>(key);
    row.replicates = static_cast<long>(cell.first.size());
    const auto fit = failures.find(key);
    row.failures = fit == failures.end() ? 0 : fit->second;
    row.mean_fdp = mean_of(cell.first);
    row.se_fdp = se_of(cell.first, row.mean_fdp);
    row.mean_power = mean_of(cell.second);
    row.se_power = se_of(cell.second, row.mean_power);
    std::vector<double> sorted = cell.first;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    row.median_fdp = n == 0 ? 0.0
                            : (n % 2 ? sorted[n / 2]
                                     : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-16s %-22s %6s %5s %5s %9s %9s %9s %10s %9s\n", "scenario",
                "method", "q", "n", "fail", "mean_fdp", "se_fdp", "med_fdp", "mean_power",
                "se_power");
  out += buf;
  for (const SummaryRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-16s %-22s %6.3f %5ld %5ld %9.4f %9.4f %9.4f %10.4f %9.4f\n",
                  r.scenario.c_str(), r.method.c_str(), r.q, r.replicates, r.failures, r.mean_fdp,
                  r.se_fdp, r.median_fdp, r.mean_power, r.se_power);
    out += buf;
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<ReplicateRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << "# " << kResultsSchemaVersion << "\n";
  out << "scenario,method,rep,q,fdp,power,n_selected,tau,seed,wall_ms\n";
  char buf[512];
  for (const ReplicateRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%g,%.10g,%.10g,%ld,%.10g,%llu,%.3f\n",
                  r.scenario.c_str(), r.method.c_str(), r.rep, r.q, r.fdp, r.power, r.n_selected,
                  r.tau, static_cast<unsigned long long>(r.seed), r.wall_ms);
    out << buf;
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

std::vector<ReplicateRecord> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  std::string line;
  bool header_seen = false;
  std::vector<ReplicateRecord> records;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "scenario,method,rep,q,fdp,power,n_selected,tau,seed,wall_ms")
        throw std::runtime_error("read_csv: unrecognized header at line " +
                                 std::to_string(line_no));
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10)
      throw std::runtime_error("read_csv: malformed row at line " + std::to_string(line_no));
    ReplicateRecord r;
    r.scenario = fields[0];
    r.method = fields[1];
    r.rep = std::stoi(fields[2]);
    r.q = std::stod(fields[3]);
    r.fdp = std::stod(fields[4]);
    r.power = std::stod(fields[5]);
    r.n_selected = std::stol(fields[6]);
    r.tau = std::stod(fields[7]);
    r.seed = std::stoull(fields[8]);
    r.wall_ms = std::stod(fields[9]);
    r.failed = std::isnan(r.fdp);
    records.push_back(std::move(r));
  }
  if (!header_seen) throw std::runtime_error("read_csv: no header found in " + path);
  return records;
}

void write_metadata(const std::string& csv_path, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["schema"] = kResultsSchemaVersion;
  j["tool"] = kToolVersion;
  nlohmann::json c;
  c["scenario"] = canonical_scenario_name(cfg.scenario);
  c["scale"] = cfg.scale;
  std::vector<std::string> methods;
  for (const std::string& m : cfg.methods) methods.push_back(canonical_method_name(m));
  c["methods"] = methods;
  c["q"] = cfg.q_levels;
  c["reps"] = cfg.replicates;
  c["seed"] = cfg.seed;
  c["is_draws"] = cfg.is_draws;
  c["threads"] = cfg.threads;
  c["y_bins"] = cfg.y_bins;
  c["two_stage_q"] = cfg.two_stage_q;
  c["offset"] = cfg.knockoff_offset;
  c["grid_size"] = cfg.grid_size;
  c["out"] = cfg.output_path;
  nlohmann::json ov = nlohmann::json::object();
  if (cfg.overrides.p) ov["p"] = *cfg.overrides.p;
  if (cfg.overrides.n_cases) ov["n_cases"] = *cfg.overrides.n_cases;
  if (cfg.overrides.n_controls) ov["n_controls"] = *cfg.overrides.n_controls;
  if (cfg.overrides.pool_size) ov["pool_size"] = *cfg.overrides.pool_size;
  if (cfg.overrides.gamma0) ov["gamma0"] = *cfg.overrides.gamma0;
  if (cfg.overrides.gamma_y) ov["gamma_y"] = *cfg.overrides.gamma_y;
  if (cfg.overrides.beta_sd) ov["beta_sd"] = *cfg.overrides.beta_sd;
  if (cfg.overrides.gamma_sd) ov["gamma_sd"] = *cfg.overrides.gamma_sd;
  if (cfg.overrides.noise_sd) ov["noise_sd"] = *cfg.overrides.noise_sd;
  if (cfg.overrides.beta_nonnull_count) ov["beta_nonnull_count"] = *cfg.overrides.beta_nonnull_count;
  if (cfg.overrides.gamma_nonnull_count)
    ov["gamma_nonnull_count"] = *cfg.overrides.gamma_nonnull_count;
  if (cfg.overrides.forbid_overlap) ov["forbid_overlap"] = *cfg.overrides.forbid_overlap;
  if (cfg.overrides.block_size) ov["block_size"] = *cfg.overrides.block_size;
  c["overrides"] = ov;
  j["config"] = c;

  const std::string path = csv_path + ".meta.json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_metadata: cannot open " + path);
  out << j.dump(2) << "\n";
}

CrtCalibrationResult run_crt_calibration(const CrtCalibrationConfig& cfg) {
  const std::string scen = canonical_scenario_name(cfg.scenario);
  if (cfg.replicates < 1) throw std::invalid_argument("crt calibration: replicates must be >= 1");
  if (cfg.resamples < 0) throw std::invalid_argument("crt calibration: negative resamples");

  CrtCalibrationResult result;
  RngStream master(cfg.seed);
  for (int rep = 0; rep < cfg.replicates; ++rep) {
    RngStream rep_rng = master.child(static_cast<std::uint64_t>(rep));
    RngStream scen_rng = rep_rng.child(0);
    Scenario sc = make_scenario(scen, cfg.scale, scen_rng);
    RngStream draw_rng = rep_rng.child(1);
    LabeledSample s = sc.draw(draw_rng);

    int j = cfg.target;
    if (j < 0) {
      for (int c = 0; c < s.p(); ++c) {
        const bool in_beta = std::find(s.truth_beta_nonnull.begin(), s.truth_beta_nonnull.end(),
                                       c) != s.truth_beta_nonnull.end();
        const bool in_gamma = std::find(s.truth_gamma_nonnull.begin(),
                                        s.truth_gamma_nonnull.end(),
                                        c) != s.truth_gamma_nonnull.end();
        if (!in_beta && !in_gamma) {
          j = c;
          break;
        }
      }
      if (j < 0) throw std::runtime_error("crt calibration: no doubly-null coordinate exists");
    }

    const ExperimentConfig unused_cfg;
    ReplicateContext ctx{unused_cfg, sc, s};
    sc.pop.covariates.population_moments(ctx.mu_pop, ctx.sigma_pop);
    ctx.binary_response = sc.pop.response.is_binary();
    const int bins = cfg.y_bins > 0 ? cfg.y_bins : sc.default_y_bins;

    LabeledSample g = s;
    if (!ctx.binary_response) g.y = discretize_quantiles(s.y, bins);
    if (!(ctx.binary_response && s.d)) g.d.reset();

    TiltSpec tspec;
    tspec.base = &sc.pop.covariates;
    tspec.weight_fn = known_weight_fn(ctx);
    tspec.mc_draws = cfg.is_draws;

    std::set<GroupKey> keys;
    for (long i = 0; i < g.n(); ++i) keys.insert(GroupKey{g.y[i], g.d ? (*g.d)[i] : -1});

    CrtConfig tilted;
    tilted.j = j;
    tilted.resamples = cfg.resamples;
    RngStream moments_rng = rep_rng.child(2);
    for (const GroupKey& key : keys)
      tilted.resampler.emplace(key, estimate_tilted_moments(tspec, key, moments_rng));
    RngStream crt_rng = rep_rng.child(3);
    result.p_tilted.push_back(crt_pvalue(g, tilted, crt_rng));
    result.target_index.push_back(j);

    if (cfg.include_unadjusted) {
      TiltedMoments pop;
      pop.mu_hat = ctx.mu_pop;
      pop.sigma_hat = ctx.sigma_pop;
      pop.ess = 1e18;
      CrtConfig naive;
      naive.j = j;
      naive.resamples = cfg.resamples;
      for (const GroupKey& key : keys) {
        TiltedMoments m = pop;
        m.key = key;
        naive.resampler.emplace(key, std::move(m));
      }
      RngStream crt2_rng = rep_rng.child(4);
      result.p_unadjusted.push_back(crt_pvalue(g, naive, crt2_rng));
    }
  }
  return result;
}

}  // namespace tk
