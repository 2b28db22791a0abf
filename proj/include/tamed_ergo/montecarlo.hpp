#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tamed_ergo/model.hpp"
#include "tamed_ergo/noise.hpp"
#include "tamed_ergo/scheme.hpp"

namespace tamed {

/// Test function phi applied to the final state.
struct Observable {
  enum class Kind { moment, coordinate_moment, custom_polynomial };

  Kind kind = Kind::moment;
  unsigned order = 2;                ///< moment / coordinate_moment
  std::size_t index = 0;             ///< coordinate_moment
  std::vector<double> coefficients;  ///< custom_polynomial in the first coordinate
  std::string description;

  /// |x|^order
  static Observable moment(unsigned order);
  /// x[index]^order
  static Observable coordinate_moment(std::size_t index, unsigned order);
  /// sum_j c_j x[0]^j
  static Observable polynomial(std::vector<double> coefficients);

  double operator()(std::span<const double> x) const noexcept;
  bool operator==(const Observable& other) const;
};

/// Text form: "moment:<m>", "coordinate:<i>:<m>", "polynomial:<c0>,<c1>,...".
Observable parse_observable(std::string_view text);
std::string to_string(const Observable& obs);

struct Estimate {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased sample variance
  std::uint64_t n_samples = 0;
  double std_error = 0.0;  ///< sqrt(variance / n_samples)
  double ci95_halfwidth = 0.0;
  std::uint64_t n_exploded = 0;
};

/// Aggregates per-path values in ascending index order with compensated
/// summation. Entries flagged in `excluded` are skipped and counted as exploded.
Estimate summarize(std::span<const double> values, std::span<const std::uint8_t> excluded = {});

/// Worker count from TAMED_ERGO_WORKERS, else the hardware concurrency (>= 1).
unsigned default_workers();

struct EngineOptions {
  unsigned workers = 0;  ///< 0 means default_workers()
  bool zero_noise = false;
  std::uint64_t noise_refinement = 1;
};

/// Calls body(path_index) for every index in [0, n_paths) on `workers`
/// threads. Each index is visited exactly once; the first exception thrown
/// by any worker is rethrown.
void for_each_path(std::uint64_t n_paths, unsigned workers,
                   const std::function<void(std::uint64_t)>& body);

/// Per-path observable values at a set of step checkpoints (row-major
/// n_paths x n_checkpoints); a path that explodes is flagged as a whole.
struct PathSamples {
  std::uint64_t n_paths = 0;
  std::size_t n_columns = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> exploded;

  double at(std::uint64_t path, std::size_t column) const noexcept {
    return values[path * n_columns + column];
  }
  /// Estimate of one column; throws AllPathsExploded if nothing survived.
  Estimate column(std::size_t column) const;
  /// Estimate of the per-path average over the given columns.
  Estimate column_average(std::span<const std::size_t> columns) const;
  /// Estimate of (column a - column b) per path.
  Estimate difference(std::size_t a, std::size_t b) const;
};

PathSamples sample_at_checkpoints(const Problem& problem, const SchemeParams& params, StepKind kind,
                                  std::span<const double> x0, const Observable& obs,
                                  std::span<const std::uint64_t> checkpoints, std::uint64_t n_paths,
                                  MasterSeed master, const EngineOptions& options = {});

/// E[phi(X_N)] over paths 0..n_paths-1. Exploded paths (euler only, in
/// practice) are excluded and counted; throws AllPathsExploded when none survive.
Estimate estimate_observable(const Problem& problem, const SchemeParams& params, StepKind kind,
                             std::span<const double> x0, const Observable& obs,
                             std::uint64_t n_paths, MasterSeed master,
                             const EngineOptions& options = {});

struct TimedEstimate {
  double time = 0.0;
  std::uint64_t step = 0;
  Estimate estimate;
};

/// Converts times to step indices; throws InvalidArgument unless each time
/// is a multiple of dt within [0, n_steps dt].
std::vector<std::uint64_t> times_to_steps(std::span<const double> times, double dt,
                                          std::uint64_t n_steps);

/// E|X_n|^order for the tamed scheme at each requested time, all read out
/// of one path ensemble.
std::vector<TimedEstimate> estimate_moments_at_times(const Problem& problem,
                                                     const SchemeParams& params,
                                                     std::span<const double> x0, unsigned order,
                                                     std::span<const double> times,
                                                     std::uint64_t n_paths, MasterSeed master,
                                                     const EngineOptions& options = {});

/// Observable values of simulate_coupled_levels per path; column l is level l.
PathSamples sample_coupled_levels(const Problem& problem, double base_dt,
                                  std::uint64_t n_base_steps, double alpha, StepKind kind,
                                  std::span<const double> x0, const Observable& obs,
                                  std::span<const std::uint64_t> refinements,
                                  std::uint64_t n_paths, MasterSeed master,
                                  const EngineOptions& options = {});

}  // namespace tamed
