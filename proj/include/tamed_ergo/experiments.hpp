#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tamed_ergo/model.hpp"
#include "tamed_ergo/montecarlo.hpp"
#include "tamed_ergo/noise.hpp"
#include "tamed_ergo/scheme.hpp"

namespace tamed {

struct SweepRow {
  double parameter = 0.0;  ///< T, dt, horizon or epsilon depending on the sweep
  Estimate estimate;
  std::optional<double> reference;
  std::optional<double> abs_error;
  /// Standard error attached to abs_error (the coupled difference estimator
  /// when the reference is itself simulated).
  double error_std_error = 0.0;
};

struct SweepOptions {
  double alpha = 1.0;
  double dt_cap = 1.0;
  StepKind kind = StepKind::tamed;
  EngineOptions engine;
};

/// Rows of sup over checkpoints <= T of E|X_n|^order, one per T. Each T adds
/// checkpoints spaced max(1, floor(T / (100 dt))) steps apart; all rows read
/// the union of checkpoints from one shared ensemble.
std::vector<SweepRow> moment_growth_sweep(const Problem& problem, std::span<const double> x0,
                                          unsigned order, double dt,
                                          std::span<const double> horizons,
                                          std::uint64_t n_paths, MasterSeed master,
                                          const SweepOptions& options = {});

struct WeakErrorResult {
  std::vector<SweepRow> rows;
  double fitted_slope = 0.0;
  std::size_t rows_used = 0;
  double dt_ref = 0.0;  ///< 0 when the reference is exact
  std::string reference_provenance;
};

/// Ratio between the smallest swept dt and the fine reference step.
inline constexpr std::uint64_t kReferenceRefinement = 16;

/// |E phi(X_N) - reference| against dt at fixed T. Every level runs on the
/// same Brownian paths. Without an exact reference, the tamed scheme at
/// dt_min / 16 is simulated on those paths and errors are coupled differences.
/// The slope is a least-squares fit of log error on log dt over rows whose
/// error exceeds three standard errors; throws SlopeUndetermined with fewer
/// than three such rows.
WeakErrorResult weak_error_sweep(const Problem& problem, const Observable& obs,
                                 std::span<const double> x0, double T,
                                 std::span<const double> dt_list, std::uint64_t n_paths,
                                 MasterSeed master, std::optional<double> exact_reference,
                                 const SweepOptions& options = {});

/// Least-squares slope of log(y) against log(x). Needs two points at least.
double log_log_slope(std::span<const double> x, std::span<const double> y);

struct ErgodicResult {
  std::vector<SweepRow> rows;  ///< parameter = horizon N dt
  double invariant_reference = 0.0;
  double plateau_start = 0.0;
  double plateau_error = 0.0;  ///< |mean over plateau rows of (estimate - reference)|
  double plateau_std_error = 0.0;
  std::size_t decay_rows = 0;
  std::optional<double> decay_rate;  ///< slope of log error against horizon
};

/// Rows with error at least this multiple of the plateau enter the decay fit.
inline constexpr double kDecayFitPlateauMultiple = 10.0;

/// Error of E phi(X_N) against the invariant average for each N (shared
/// ensemble). Rows with horizon >= plateau_start form the plateau; a
/// non-positive plateau_start selects the last third of the rows.
ErgodicResult ergodic_error_curve(const Problem& problem, const Observable& obs,
                                  std::span<const double> x0, double dt,
                                  std::span<const std::uint64_t> step_counts,
                                  std::uint64_t n_paths, MasterSeed master,
                                  double invariant_reference, double plateau_start = 0.0,
                                  const SweepOptions& options = {});

struct CostSchedule {
  double epsilon = 0.0;
  unsigned R = 0;
  double c_time = 1.0;
  double c_acc = 1.0;
  double dt = 0.0;
  std::uint64_t n_steps = 0;
  double horizon = 0.0;  ///< c_time |ln eps|; the simulated time n_steps * dt is at least this
};

/// N dt = c_time |ln eps| and dt = c_acc eps |ln eps|^{-R}, N = ceil(c_time |ln eps| / dt).
CostSchedule cost_schedule(double epsilon, unsigned R, double c_time = 1.0, double c_acc = 1.0);

/// Runs the schedule and compares with the invariant reference.
SweepRow cost_end_to_end(const Problem& problem, const Observable& obs,
                         std::span<const double> x0, const CostSchedule& schedule,
                         std::uint64_t n_paths, MasterSeed master, double invariant_reference,
                         const SweepOptions& options = {});

struct ContractionResult {
  double max_ratio = 0.0;  ///< max_t |X_a(t) - X_b(t)| e^{gamma t} / |x0_a - x0_b|
  double max_distance = 0.0;
  double final_distance = 0.0;
  std::uint64_t steps = 0;
};

/// Synchronously coupled tamed paths (one shared noise stream) from two
/// initial conditions, as a fine-step proxy for the exact flow. Requires
/// dt_fine <= 1e-3. Equal initial conditions give max_ratio = 0.
ContractionResult contraction_test(const Problem& problem, std::span<const double> x0_a,
                                   std::span<const double> x0_b, double dt_fine, double T,
                                   MasterSeed master, double alpha = 1.0);

struct DivergenceResult {
  std::optional<std::uint64_t> euler_exploded_at;
  double euler_sup_norm = 0.0;
  double tamed_sup_norm = 0.0;
  double tamed_max_drift_displacement = 0.0;
  std::uint64_t tamed_displacement_violations = 0;
  std::uint64_t steps = 0;
};

/// Explicit Euler and tamed Euler on the same noise (path 0 of `master`).
DivergenceResult divergence_demo(const Problem& problem, std::span<const double> x0, double dt,
                                 std::uint64_t n_max, MasterSeed master, bool zero_noise = false,
                                 double alpha = 1.0);

}  // namespace tamed
