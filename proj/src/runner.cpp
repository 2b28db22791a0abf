#include "tamed_ergo/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tamed_ergo/error.hpp"
#include "tamed_ergo/experiments.hpp"
#include "tamed_ergo/oracle.hpp"

namespace tamed {

namespace {

using json = nlohmann::json;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Outcome {
  Table table;
  json summary = json::object();
};

std::string num(double v) { return format_number(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }

json estimate_json(const Estimate& e) {
  return {{"mean", e.mean},
          {"variance", e.variance},
          {"n_samples", e.n_samples},
          {"std_error", e.std_error},
          {"ci95_halfwidth", e.ci95_halfwidth},
          {"n_exploded", e.n_exploded}};
}

std::vector<std::string> estimate_cells(const Estimate& e) {
  return {num(e.mean), num(e.variance), num(e.n_samples), num(e.std_error), num(e.ci95_halfwidth),
          num(e.n_exploded)};
}

const std::vector<std::string> kEstimateColumns{"mean",      "variance",       "n_samples",
                                                "std_error", "ci95_halfwidth", "n_exploded"};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

EngineOptions engine(const RunConfig& c) {
  EngineOptions e;
  e.workers = c.workers;
  e.zero_noise = c.zero_noise;
  e.noise_refinement = c.noise_refinement;
  return e;
}

SweepOptions sweep(const RunConfig& c) {
  SweepOptions s;
  s.alpha = c.alpha;
  s.dt_cap = c.dt_cap;
  s.kind = c.scheme;
  s.engine = engine(c);
  return s;
}

SchemeParams scheme_params(const RunConfig& c) {
  SchemeParams p;
  p.dt = c.dt;
  p.dt_cap = c.dt_cap;
  p.alpha = c.alpha;
  p.n_steps = c.steps;
  return p;
}

MasterSeed seed(const RunConfig& c) { return MasterSeed{c.seed}; }

// Experiments ----------------------------------------------------------------

Outcome run_simulate(const RunConfig& c, const Problem& problem) {
  PathOptions opts;
  opts.checkpoints = c.checkpoints;
  if (opts.checkpoints.empty()) opts.checkpoints = {0, c.steps};
  opts.zero_noise = c.zero_noise;
  opts.noise_refinement = c.noise_refinement;
  opts.audit_displacement = c.scheme == StepKind::tamed;
  NoiseStream stream(seed(c), 0);
  const PathResult path = simulate_path(problem, scheme_params(c), c.scheme, c.x0, stream, opts);

  Outcome o;
  o.table.columns = {"step", "time"};
  for (std::size_t i = 0; i < problem.dim(); ++i) o.table.columns.push_back("x_" + std::to_string(i));
  o.table.columns.push_back("norm");
  for (const auto& [step, state] : path.recorded_states) {
    std::vector<std::string> row{num(step), num(static_cast<double>(step) * c.dt)};
    for (double v : state) row.push_back(num(v));
    row.push_back(num(norm(state)));
    o.table.rows.push_back(std::move(row));
  }
  o.summary["final_state"] = path.final_state;
  o.summary["sup_norm"] = path.sup_norm;
  o.summary["steps_taken"] = path.steps_taken;
  o.summary["exploded_at"] = path.exploded_at ? json(*path.exploded_at) : json(nullptr);
  if (opts.audit_displacement) {
    o.summary["max_drift_displacement"] = path.max_drift_displacement;
    o.summary["displacement_violations"] = path.displacement_violations;
  }
  return o;
}

Outcome run_estimate(const RunConfig& c, const Problem& problem) {
  const Observable obs = parse_observable(c.observable);
  const Estimate e = estimate_observable(problem, scheme_params(c), c.scheme, c.x0, obs, c.paths,
                                         seed(c), engine(c));
  Outcome o;
  o.table.columns = {"observable", "scheme", "dt", "steps", "horizon", "paths"};
  o.table.columns.insert(o.table.columns.end(), kEstimateColumns.begin(), kEstimateColumns.end());
  std::vector<std::string> row{to_string(obs), std::string(to_string(c.scheme)), num(c.dt),
                               num(c.steps), num(static_cast<double>(c.steps) * c.dt), num(c.paths)};
  const auto cells = estimate_cells(e);
  row.insert(row.end(), cells.begin(), cells.end());
  o.table.rows.push_back(std::move(row));
  o.summary["observable"] = obs.description;
  o.summary["estimate"] = estimate_json(e);
  return o;
}

Outcome run_oracle(const RunConfig& c, const Problem& problem) {
  const Observable obs = parse_observable(c.observable);
  std::string kind = c.oracle;
  if (kind == "auto") {
    kind = problem.ou() ? "closed_form" : (problem.has_potential() && problem.dim() == 1 ? "quadrature" : "fine_step");
  }
  Outcome o;
  o.table.columns = {"quantity", "provenance", "value", "std_error"};
  json refs = json::array();
  auto add = [&](const std::string& quantity, const std::string& provenance, double value,
                 std::optional<double> se) {
    o.table.rows.push_back({quantity, provenance, num(value), se ? num(*se) : ""});
    json r{{"quantity", quantity}, {"provenance", provenance}, {"value", value}};
    if (se) r["std_error"] = *se;
    refs.push_back(r);
  };
  if (kind == "closed_form") {
    if (!problem.ou()) {
      throw OracleUnavailable("oracle", "closed form is only available for the ou problem");
    }
    add("invariant", "closed-form",
        ou_expectation(*problem.ou(), obs, 0.0, std::numeric_limits<double>::infinity()), std::nullopt);
    if (c.horizon > 0.0) {
      add("finite_time", "closed-form", ou_expectation(*problem.ou(), obs, c.x0[0], c.horizon),
          std::nullopt);
    }
  } else if (kind == "quadrature") {
    const auto scale = problem.noise().isotropic_scale();
    if (!scale) throw NotGradientProblem("oracle", "noise is not isotropic");
    QuadratureGrid grid{c.grid_lower, c.grid_upper, c.grid_nodes,
                        c.grid_rule == "simpson" ? QuadratureRule::simpson : QuadratureRule::trapezoid};
    add("invariant", "quadrature", quadrature_invariant_average(problem, obs, *scale, grid),
        std::nullopt);
  } else {
    const Estimate e =
        reference_finite_time(problem, obs, c.x0, c.horizon, c.dt_ref, c.paths, seed(c), engine(c));
    add("finite_time", "fine-step", e.mean, e.std_error);
  }
  o.summary["observable"] = obs.description;
  o.summary["references"] = refs;
  return o;
}

Outcome run_moment_growth(const RunConfig& c, const Problem& problem) {
  const auto rows = moment_growth_sweep(problem, c.x0, c.order, c.dt, c.horizons, c.paths, seed(c),
                                        sweep(c));
  Outcome o;
  o.table.columns = {"T"};
  o.table.columns.insert(o.table.columns.end(), kEstimateColumns.begin(), kEstimateColumns.end());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  json jrows = json::array();
  for (const auto& r : rows) {
    std::vector<std::string> row{num(r.parameter)};
    const auto cells = estimate_cells(r.estimate);
    row.insert(row.end(), cells.begin(), cells.end());
    o.table.rows.push_back(std::move(row));
    lo = std::min(lo, r.estimate.mean);
    hi = std::max(hi, r.estimate.mean);
    jrows.push_back({{"T", r.parameter}, {"sup_moment", estimate_json(r.estimate)}});
  }
  o.summary["rows"] = jrows;
  o.summary["max_over_min"] = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return o;
}

Outcome run_weak_error(const RunConfig& c, const Problem& problem) {
  const Observable obs = parse_observable(c.observable);
  std::string kind = c.reference;
  if (kind == "auto") kind = problem.ou() ? "closed_form" : "fine_step";
  std::optional<double> exact;
  if (kind == "closed_form") {
    if (!problem.ou()) {
      throw OracleUnavailable("oracle", "closed form is only available for the ou problem");
    }
    exact = ou_expectation(*problem.ou(), obs, c.x0[0], c.horizon);
  }
  const WeakErrorResult res = weak_error_sweep(problem, obs, c.x0, c.horizon, c.dt_sweep, c.paths,
                                               seed(c), exact, sweep(c));
  Outcome o;
  o.table.columns = {"dt"};
  o.table.columns.insert(o.table.columns.end(), kEstimateColumns.begin(), kEstimateColumns.end());
  o.table.columns.insert(o.table.columns.end(), {"reference", "abs_error", "error_std_error"});
  for (const auto& r : res.rows) {
    std::vector<std::string> row{num(r.parameter)};
    const auto cells = estimate_cells(r.estimate);
    row.insert(row.end(), cells.begin(), cells.end());
    row.push_back(num(*r.reference));
    row.push_back(num(*r.abs_error));
    row.push_back(num(r.error_std_error));
    o.table.rows.push_back(std::move(row));
  }
  o.summary["fitted_slope"] = res.fitted_slope;
  o.summary["rows_used"] = res.rows_used;
  o.summary["reference_provenance"] = res.reference_provenance;
  o.summary["dt_ref"] = res.dt_ref;
  o.summary["first_order_verdict"] = res.fitted_slope >= 0.7 && res.fitted_slope <= 1.3;
  return o;
}

Outcome run_ergodic_error(const RunConfig& c, const Problem& problem) {
  const Observable obs = parse_observable(c.observable);
  const InvariantReference ref = invariant_reference(problem, obs);
  std::vector<std::uint64_t> steps;
  for (double h : c.horizons) {
    const double ratio = h / c.dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
      throw InvalidArgument("experiments", "each horizon must be a multiple of dt");
    }
    steps.push_back(static_cast<std::uint64_t>(rounded));
  }
  const ErgodicResult res = ergodic_error_curve(problem, obs, c.x0, c.dt, steps, c.paths, seed(c),
                                                ref.value, c.plateau_start, sweep(c));
  Outcome o;
  o.table.columns = {"horizon"};
  o.table.columns.insert(o.table.columns.end(), kEstimateColumns.begin(), kEstimateColumns.end());
  o.table.columns.insert(o.table.columns.end(), {"reference", "abs_error"});
  for (const auto& r : res.rows) {
    std::vector<std::string> row{num(r.parameter)};
    const auto cells = estimate_cells(r.estimate);
    row.insert(row.end(), cells.begin(), cells.end());
    row.push_back(num(*r.reference));
    row.push_back(num(*r.abs_error));
    o.table.rows.push_back(std::move(row));
  }
  o.summary["invariant_reference"] = ref.value;
  o.summary["reference_provenance"] = ref.provenance;
  o.summary["plateau_start"] = res.plateau_start;
  o.summary["plateau_error"] = res.plateau_error;
  o.summary["plateau_std_error"] = res.plateau_std_error;
  o.summary["decay_rows"] = res.decay_rows;
  o.summary["decay_rate"] = res.decay_rate ? json(*res.decay_rate) : json(nullptr);
  return o;
}

Outcome run_cost(const RunConfig& c, const Problem& problem) {
  Outcome o;
  o.table.columns = {"epsilon", "R", "c_time", "c_acc", "dt", "n_steps", "horizon", "cost_model"};
  if (c.verify) {
    o.table.columns.insert(o.table.columns.end(),
                           {"mean", "std_error", "reference", "abs_error", "within_tolerance"});
  }
  std::optional<InvariantReference> ref;
  std::optional<Observable> obs;
  if (c.verify) {
    obs = parse_observable(c.observable);
    ref = invariant_reference(problem, *obs);
  }
  json jrows = json::array();
  for (double eps : c.epsilon) {
    const CostSchedule s = cost_schedule(eps, c.R, c.c_time, c.c_acc);
    const double model = std::pow(std::abs(std::log(eps)), 1.0 + c.R) / eps;
    std::vector<std::string> row{num(s.epsilon), num(std::uint64_t{s.R}), num(s.c_time),
                                 num(s.c_acc),   num(s.dt),              num(s.n_steps),
                                 num(s.horizon), num(model)};
    json jr{{"epsilon", s.epsilon}, {"dt", s.dt}, {"n_steps", s.n_steps}, {"horizon", s.horizon}};
    if (c.verify) {
      const SweepRow r = cost_end_to_end(problem, *obs, c.x0, s, c.paths, seed(c), ref->value, sweep(c));
      const bool ok = *r.abs_error <= eps + 3.0 * r.estimate.std_error;
      row.insert(row.end(), {num(r.estimate.mean), num(r.estimate.std_error), num(ref->value),
                             num(*r.abs_error), ok ? "true" : "false"});
      jr["abs_error"] = *r.abs_error;
      jr["within_tolerance"] = ok;
    }
    o.table.rows.push_back(std::move(row));
    jrows.push_back(jr);
  }
  o.summary["rows"] = jrows;
  return o;
}

Outcome run_contraction(const RunConfig& c, const Problem& problem) {
  const double T = c.horizon > 0.0 ? c.horizon : 10.0;
  const ContractionResult r = contraction_test(problem, c.x0, c.x0_b, c.dt_fine, T, seed(c), c.alpha);
  Outcome o;
  o.table.columns = {"dt_fine", "T", "max_ratio", "max_distance", "final_distance", "steps"};
  o.table.rows.push_back({num(c.dt_fine), num(T), num(r.max_ratio), num(r.max_distance),
                          num(r.final_distance), num(r.steps)});
  o.summary["max_ratio"] = r.max_ratio;
  o.summary["contraction_verdict"] = r.max_ratio <= 1.05;
  return o;
}

Outcome run_diverge(const RunConfig& c, const Problem& problem) {
  const DivergenceResult r = divergence_demo(problem, c.x0, c.dt, c.steps, seed(c), c.zero_noise, c.alpha);
  Outcome o;
  o.table.columns = {"dt", "steps", "euler_exploded_at", "euler_sup_norm", "tamed_sup_norm",
                     "tamed_max_drift_displacement", "tamed_displacement_violations"};
  o.table.rows.push_back({num(c.dt), num(r.steps),
                          r.euler_exploded_at ? num(*r.euler_exploded_at) : "",
                          num(r.euler_sup_norm), num(r.tamed_sup_norm),
                          num(r.tamed_max_drift_displacement), num(r.tamed_displacement_violations)});
  o.summary["euler_exploded_at"] = r.euler_exploded_at ? json(*r.euler_exploded_at) : json(nullptr);
  o.summary["euler_sup_norm"] = r.euler_sup_norm;
  o.summary["tamed_sup_norm"] = r.tamed_sup_norm;
  o.summary["tamed_max_drift_displacement"] = r.tamed_max_drift_displacement;
  o.summary["tamed_displacement_violations"] = r.tamed_displacement_violations;
  return o;
}

Outcome run_check(const RunConfig& c, const Problem& problem) {
  const AssumptionReport reports[] = {check_one_sided(problem, c.samples, c.radius, c.seed),
                                      check_poly_growth(problem, c.samples, c.radius, c.seed)};
  Outcome o;
  o.table.columns = {"kind", "samples_tested", "worst_ratio", "passed", "radius", "seed", "notes"};
  json jr = json::array();
  for (const auto& r : reports) {
    const std::string kind = r.kind == AssumptionKind::one_sided ? "one_sided" : "poly_growth";
    o.table.rows.push_back({kind, num(std::uint64_t{r.samples_tested}), num(r.worst_ratio),
                            r.passed ? "true" : "false", num(r.sampling_radius), num(r.seed),
                            r.notes});
    json j{{"kind", kind},      {"samples_tested", r.samples_tested}, {"worst_ratio", r.worst_ratio},
           {"passed", r.passed}, {"witness", r.witness},              {"notes", r.notes}};
    if (!r.witness_second.empty()) j["witness_second"] = r.witness_second;
    jr.push_back(j);
  }
  o.summary["reports"] = jr;
  return o;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

void write_csv(const std::filesystem::path& path, const RunConfig& c, const Table& t) {
  std::ofstream f(path);
  if (!f) throw Error("cli", "cannot write " + path.string());
  f << "# tamed-ergo " << to_string(c.experiment) << "\n";
  f << "# generated: " << utc_timestamp() << "\n";
  f << "# config_hash: " << config_hash(c) << "\n";
  f << "# seed: " << c.seed << "\n";
  std::istringstream rendered(render(c));
  for (std::string line; std::getline(rendered, line);) {
    f << "# config: " << line << "\n";
  }
  for (std::size_t i = 0; i < t.columns.size(); ++i) f << (i ? "," : "") << t.columns[i];
  f << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << csv_cell(row[i]);
    f << "\n";
  }
}

json config_json(const RunConfig& c) {
  KeyValues kv;
  std::vector<ConfigIssue> ignored;
  kv = parse_key_values(render(c), ignored);
  json j = json::object();
  for (const auto& [k, v] : kv) j[k] = v.size() == 1 ? json(v.front()) : json(v);
  return j;
}

}  // namespace

int run(const RunConfig& config, std::ostream& console, std::ostream& errors) {
  const auto started = std::chrono::steady_clock::now();
  try {
    const Problem problem = make_problem(config);
    Outcome outcome;
    switch (config.experiment) {
      case Experiment::simulate: outcome = run_simulate(config, problem); break;
      case Experiment::estimate: outcome = run_estimate(config, problem); break;
      case Experiment::oracle: outcome = run_oracle(config, problem); break;
      case Experiment::moment_growth: outcome = run_moment_growth(config, problem); break;
      case Experiment::weak_error: outcome = run_weak_error(config, problem); break;
      case Experiment::ergodic_error: outcome = run_ergodic_error(config, problem); break;
      case Experiment::cost: outcome = run_cost(config, problem); break;
      case Experiment::contraction: outcome = run_contraction(config, problem); break;
      case Experiment::diverge: outcome = run_diverge(config, problem); break;
      case Experiment::check: outcome = run_check(config, problem); break;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    json summary{{"experiment", std::string(to_string(config.experiment))},
                 {"config_hash", config_hash(config)},
                 {"seed", config.seed},
                 {"problem", config.problem},
                 {"config", config_json(config)},
                 {"wall_clock_seconds", seconds},
                 {"results", outcome.summary}};

    const std::filesystem::path dir(config.out);
    std::filesystem::create_directories(dir);
    const std::string stem(to_string(config.experiment));
    write_csv(dir / (stem + ".csv"), config, outcome.table);
    std::ofstream(dir / (stem + ".json")) << summary.dump(2) << "\n";
    console << summary.dump(2) << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    errors << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    errors << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    errors << "cli: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace tamed
