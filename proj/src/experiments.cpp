#include "tamed_ergo/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "tamed_ergo/error.hpp"

namespace tamed {

namespace {

std::uint64_t integer_ratio(double numerator, double denominator, const char* what) {
  const double ratio = numerator / denominator;
  const double rounded = std::round(ratio);
  if (!(rounded >= 0.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidArgument("experiments", what);
  }
  return static_cast<std::uint64_t>(rounded);
}

SchemeParams make_params(double dt, std::uint64_t n_steps, const SweepOptions& options) {
  SchemeParams p;
  p.dt = dt;
  p.dt_cap = options.dt_cap;
  p.alpha = options.alpha;
  p.n_steps = n_steps;
  p.validate();
  return p;
}

}  // namespace

std::vector<SweepRow> moment_growth_sweep(const Problem& problem, std::span<const double> x0,
                                          unsigned order, double dt,
                                          std::span<const double> horizons,
                                          std::uint64_t n_paths, MasterSeed master,
                                          const SweepOptions& options) {
  if (horizons.empty()) {
    throw InvalidArgument("experiments", "moment-growth sweep needs at least one horizon");
  }
  if (order == 0 || order % 2 != 0) {
    throw InvalidArgument("experiments", "moment order must be a positive even integer");
  }
  std::vector<std::vector<std::uint64_t>> per_horizon;
  std::set<std::uint64_t> all;
  for (double T : horizons) {
    const std::uint64_t n = integer_ratio(T, dt, "each horizon must be a multiple of dt");
    const std::uint64_t stride = std::max<std::uint64_t>(1, n / 100);
    std::vector<std::uint64_t> cps;
    for (std::uint64_t s = 0; s < n; s += stride) cps.push_back(s);
    cps.push_back(n);
    all.insert(cps.begin(), cps.end());
    per_horizon.push_back(std::move(cps));
  }
  const std::vector<std::uint64_t> checkpoints(all.begin(), all.end());
  const SchemeParams params = make_params(dt, checkpoints.back(), options);
  const PathSamples samples =
      sample_at_checkpoints(problem, params, options.kind, x0, Observable::moment(order),
                            checkpoints, n_paths, master, options.engine);
  std::vector<Estimate> column_estimates;
  column_estimates.reserve(checkpoints.size());
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    column_estimates.push_back(samples.column(c));
  }

  std::vector<SweepRow> rows;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    SweepRow row;
    row.parameter = horizons[h];
    // Every shared checkpoint up to T counts, so rows are nested and monotone.
    const std::uint64_t n = per_horizon[h].back();
    for (std::size_t idx = 0; idx < checkpoints.size() && checkpoints[idx] <= n; ++idx) {
      if (idx == 0 || column_estimates[idx].mean > row.estimate.mean) {
        row.estimate = column_estimates[idx];
      }
    }
    rows.push_back(row);
  }
  return rows;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("experiments", "slope fit needs at least two paired points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

WeakErrorResult weak_error_sweep(const Problem& problem, const Observable& obs,
                                 std::span<const double> x0, double T,
                                 std::span<const double> dt_list, std::uint64_t n_paths,
                                 MasterSeed master, std::optional<double> exact_reference,
                                 const SweepOptions& options) {
  if (dt_list.size() < 3) {
    throw SlopeUndetermined("experiments", "a slope needs at least three step sizes");
  }
  for (std::size_t i = 1; i < dt_list.size(); ++i) {
    if (!(dt_list[i] < dt_list[i - 1])) {
      throw InvalidArgument("experiments", "dt list must be strictly decreasing");
    }
  }
  for (double dt : dt_list) {
    make_params(dt, 1, options);
    integer_ratio(T, dt, "every dt must divide T");
  }

  WeakErrorResult result;
  const double dt_min = dt_list.back();
  double base_dt = dt_min;
  std::vector<std::uint64_t> refinements;
  if (exact_reference) {
    result.reference_provenance = "closed-form";
  } else {
    base_dt = dt_min / static_cast<double>(kReferenceRefinement);
    result.dt_ref = base_dt;
    result.reference_provenance = "fine-step";
  }
  for (double dt : dt_list) {
    refinements.push_back(integer_ratio(dt, base_dt, "every dt must be a multiple of the finest step"));
  }
  if (!exact_reference) refinements.push_back(1);
  const std::uint64_t n_base = integer_ratio(T, base_dt, "T must be a multiple of the finest step");

  const PathSamples samples =
      sample_coupled_levels(problem, base_dt, n_base, options.alpha, options.kind, x0, obs,
                            refinements, n_paths, master, options.engine);

  std::optional<Estimate> reference_estimate;
  double reference = 0.0;
  if (exact_reference) {
    reference = *exact_reference;
  } else {
    reference_estimate = samples.column(dt_list.size());
    reference = reference_estimate->mean;
  }

  std::vector<double> fit_dt;
  std::vector<double> fit_err;
  for (std::size_t i = 0; i < dt_list.size(); ++i) {
    SweepRow row;
    row.parameter = dt_list[i];
    row.estimate = samples.column(i);
    row.reference = reference;
    if (exact_reference) {
      row.abs_error = std::abs(row.estimate.mean - reference);
      row.error_std_error = row.estimate.std_error;
    } else {
      const Estimate diff = samples.difference(i, dt_list.size());
      row.abs_error = std::abs(diff.mean);
      row.error_std_error = diff.std_error;
    }
    if (*row.abs_error > 3.0 * row.error_std_error && *row.abs_error > 0.0) {
      fit_dt.push_back(row.parameter);
      fit_err.push_back(*row.abs_error);
    }
    result.rows.push_back(row);
  }
  result.rows_used = fit_dt.size();
  if (fit_dt.size() < 3) {
    throw SlopeUndetermined("experiments", "only " + std::to_string(fit_dt.size()) +
                                               " rows rise above the Monte Carlo noise floor");
  }
  result.fitted_slope = log_log_slope(fit_dt, fit_err);
  return result;
}

ErgodicResult ergodic_error_curve(const Problem& problem, const Observable& obs,
                                  std::span<const double> x0, double dt,
                                  std::span<const std::uint64_t> step_counts,
                                  std::uint64_t n_paths, MasterSeed master,
                                  double invariant_reference, double plateau_start,
                                  const SweepOptions& options) {
  if (step_counts.empty()) {
    throw InvalidArgument("experiments", "ergodic curve needs at least one horizon");
  }
  for (std::size_t i = 1; i < step_counts.size(); ++i) {
    if (!(step_counts[i] > step_counts[i - 1])) {
      throw InvalidArgument("experiments", "step counts must be strictly increasing");
    }
  }
  const SchemeParams params = make_params(dt, step_counts.back(), options);
  const PathSamples samples = sample_at_checkpoints(problem, params, options.kind, x0, obs,
                                                    step_counts, n_paths, master, options.engine);
  ErgodicResult result;
  result.invariant_reference = invariant_reference;
  const std::size_t n = step_counts.size();
  for (std::size_t i = 0; i < n; ++i) {
    SweepRow row;
    row.parameter = static_cast<double>(step_counts[i]) * dt;
    row.estimate = samples.column(i);
    row.reference = invariant_reference;
    row.abs_error = std::abs(row.estimate.mean - invariant_reference);
    row.error_std_error = row.estimate.std_error;
    result.rows.push_back(row);
  }

  if (!(plateau_start > 0.0)) {
    plateau_start = result.rows[n - (n + 2) / 3].parameter;
  }
  result.plateau_start = plateau_start;
  std::vector<std::size_t> plateau_cols;
  for (std::size_t i = 0; i < n; ++i) {
    if (result.rows[i].parameter >= plateau_start) plateau_cols.push_back(i);
  }
  if (plateau_cols.empty()) {
    throw InvalidArgument("experiments", "no horizon reaches the plateau start");
  }
  const Estimate plateau = samples.column_average(plateau_cols);
  result.plateau_error = std::abs(plateau.mean - invariant_reference);
  result.plateau_std_error = plateau.std_error;

  std::vector<double> horizons;
  std::vector<double> log_err;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = result.rows[i];
    if (row.parameter < plateau_start &&
        *row.abs_error >= kDecayFitPlateauMultiple * result.plateau_error && *row.abs_error > 0.0) {
      horizons.push_back(row.parameter);
      log_err.push_back(std::log(*row.abs_error));
    }
  }
  result.decay_rows = horizons.size();
  if (horizons.size() >= 2) {
    const double m = static_cast<double>(horizons.size());
    const double sx = std::accumulate(horizons.begin(), horizons.end(), 0.0);
    const double sy = std::accumulate(log_err.begin(), log_err.end(), 0.0);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      sxx += horizons[i] * horizons[i];
      sxy += horizons[i] * log_err[i];
    }
    result.decay_rate = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return result;
}

CostSchedule cost_schedule(double epsilon, unsigned R, double c_time, double c_acc) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    throw InvalidArgument("experiments", "epsilon must lie in (0, 1)");
  }
  if (!(c_time > 0.0) || !(c_acc > 0.0)) {
    throw InvalidArgument("experiments", "schedule constants must be positive");
  }
  CostSchedule s;
  s.epsilon = epsilon;
  s.R = R;
  s.c_time = c_time;
  s.c_acc = c_acc;
  const double log_eps = std::abs(std::log(epsilon));
  const double target_horizon = c_time * log_eps;
  s.dt = c_acc * epsilon * std::pow(log_eps, -static_cast<double>(R));
  s.n_steps = static_cast<std::uint64_t>(std::ceil(target_horizon / s.dt));
  s.horizon = target_horizon;
  return s;
}

SweepRow cost_end_to_end(const Problem& problem, const Observable& obs,
                         std::span<const double> x0, const CostSchedule& schedule,
                         std::uint64_t n_paths, MasterSeed master, double invariant_reference,
                         const SweepOptions& options) {
  const SchemeParams params = make_params(schedule.dt, schedule.n_steps, options);
  SweepRow row;
  row.parameter = schedule.epsilon;
  row.estimate =
      estimate_observable(problem, params, options.kind, x0, obs, n_paths, master, options.engine);
  row.reference = invariant_reference;
  row.abs_error = std::abs(row.estimate.mean - invariant_reference);
  row.error_std_error = row.estimate.std_error;
  return row;
}

ContractionResult contraction_test(const Problem& problem, std::span<const double> x0_a,
                                   std::span<const double> x0_b, double dt_fine, double T,
                                   MasterSeed master, double alpha) {
  constexpr double kMaxFineStep = 1e-3;
  if (!(dt_fine > 0.0) || dt_fine > kMaxFineStep * (1.0 + 1e-12)) {
    throw InvalidArgument("experiments", "contraction proxy needs 0 < dt_fine <= 1e-3");
  }
  const std::size_t d = problem.dim();
  if (x0_a.size() != d || x0_b.size() != d) {
    throw InvalidArgument("experiments", "initial conditions differ from problem dimension");
  }
  const std::uint64_t n = integer_ratio(T, dt_fine, "T must be a multiple of dt_fine");
  Vector a(x0_a.begin(), x0_a.end());
  Vector b(x0_b.begin(), x0_b.end());
  Vector diff(d);
  auto distance = [&] {
    for (std::size_t i = 0; i < d; ++i) diff[i] = a[i] - b[i];
    return norm(diff);
  };
  const double initial = distance();
  ContractionResult result;
  result.steps = n;
  result.max_distance = initial;

  NoiseStream stream(master, 0);
  const std::size_t k = problem.noise().channels();
  Vector increment(k);
  Vector noise_term(d);
  Vector fa(d), fb(d);
  for (std::uint64_t s = 0; s < n; ++s) {
    stream.gaussian_increments(dt_fine, increment);
    problem.noise().apply(increment, noise_term);
    problem.drift(a, fa);
    problem.drift(b, fb);
    step_into(StepKind::tamed, a, fa, dt_fine, alpha, noise_term, a);
    step_into(StepKind::tamed, b, fb, dt_fine, alpha, noise_term, b);
    const double dist = distance();
    result.max_distance = std::max(result.max_distance, dist);
    if (initial > 0.0) {
      const double t = static_cast<double>(s + 1) * dt_fine;
      result.max_ratio = std::max(result.max_ratio, dist * std::exp(problem.gamma() * t) / initial);
    }
  }
  if (initial > 0.0) result.max_ratio = std::max(result.max_ratio, 1.0);
  result.final_distance = distance();
  return result;
}

DivergenceResult divergence_demo(const Problem& problem, std::span<const double> x0, double dt,
                                 std::uint64_t n_max, MasterSeed master, bool zero_noise,
                                 double alpha) {
  SchemeParams params;
  params.dt = dt;
  params.alpha = alpha;
  params.dt_cap = std::max(1.0, dt);
  params.n_steps = n_max;
  PathOptions options;
  options.zero_noise = zero_noise;

  NoiseStream euler_stream(master, 0);
  const PathResult euler = simulate_path(problem, params, StepKind::euler, x0, euler_stream, options);
  options.audit_displacement = true;
  NoiseStream tamed_stream(master, 0);
  const PathResult tamed = simulate_path(problem, params, StepKind::tamed, x0, tamed_stream, options);

  DivergenceResult result;
  result.euler_exploded_at = euler.exploded_at;
  result.euler_sup_norm = euler.sup_norm;
  result.tamed_sup_norm = tamed.sup_norm;
  result.tamed_max_drift_displacement = tamed.max_drift_displacement;
  result.tamed_displacement_violations = tamed.displacement_violations;
  result.steps = tamed.steps_taken;
  return result;
}

}  // namespace tamed
