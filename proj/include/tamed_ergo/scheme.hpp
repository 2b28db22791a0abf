#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "tamed_ergo/model.hpp"
#include "tamed_ergo/noise.hpp"

namespace tamed {

/// Time-step dt in (0, dt_cap], taming parameter alpha > 0, n_steps steps.
struct SchemeParams {
  double dt = 0.01;
  double dt_cap = 1.0;
  double alpha = 1.0;
  std::uint64_t n_steps = 0;

  /// Throws InvalidArgument naming the violated field.
  void validate() const;
  double horizon() const noexcept { return static_cast<double>(n_steps) * dt; }
};

enum class StepKind { tamed, euler };

std::string_view to_string(StepKind kind) noexcept;
/// Throws InvalidArgument for anything but "tamed" or "euler".
StepKind parse_step_kind(std::string_view text);

/// A state with norm above this (or any non-finite entry) counts as exploded.
inline constexpr double kOverflowThreshold = 1e10;

/// x + dt f / (1 + alpha dt |f|) + noise_term.
Vector tamed_step(std::span<const double> x, std::span<const double> fx, const SchemeParams& params,
                  std::span<const double> noise_term);

/// x + dt f + noise_term.
Vector euler_step(std::span<const double> x, std::span<const double> fx, const SchemeParams& params,
                  std::span<const double> noise_term);

/// Allocation-free step used by the path drivers; `out` may alias `x`.
void step_into(StepKind kind, std::span<const double> x, std::span<const double> fx, double dt,
               double alpha, std::span<const double> noise_term, std::span<double> out) noexcept;

/// f(x) / (1 + alpha |f(x)|); its norm is below 1/alpha.
Vector modified_drift(const Problem& problem, std::span<const double> x, double alpha);

struct PathOptions {
  /// Sorted step indices (each <= n_steps) at which the state is recorded.
  std::vector<std::uint64_t> checkpoints;
  /// Each step consumes this many stream increments of size dt / refinement,
  /// summed; a path at dt with refinement r sees the same Brownian path as a
  /// path at dt / r driven by the same stream.
  std::uint64_t noise_refinement = 1;
  /// Forces noise_term = 0 (no draws are made).
  bool zero_noise = false;
  /// Measure |X_{n+1} - X_n - noise_term| on every step against
  /// min(dt |f(X_n)|, 1/alpha) (tamed only).
  bool audit_displacement = false;
};

struct PathResult {
  Vector final_state;
  double sup_norm = 0.0;  ///< max |X_n| over every visited state, X_0 included
  std::optional<std::uint64_t> exploded_at;
  std::vector<std::pair<std::uint64_t, Vector>> recorded_states;
  std::uint64_t steps_taken = 0;
  /// Filled only when auditing.
  double max_drift_displacement = 0.0;
  std::uint64_t displacement_violations = 0;
};

/// Iterates the chosen scheme from x0. Explosion stops the path and is
/// reported in `exploded_at`, never thrown.
PathResult simulate_path(const Problem& problem, const SchemeParams& params, StepKind kind,
                         std::span<const double> x0, NoiseStream& stream,
                         const PathOptions& options = {});

struct LevelFinal {
  Vector state;
  bool exploded = false;
};

/// Runs several step sizes on one Brownian path. Level i uses step
/// refinements[i] * base_dt for n_base_steps / refinements[i] steps, fed by
/// sums of the base increments (common random numbers). Every refinement
/// must divide n_base_steps.
std::vector<LevelFinal> simulate_coupled_levels(const Problem& problem, double base_dt,
                                                std::uint64_t n_base_steps, double alpha,
                                                StepKind kind, std::span<const double> x0,
                                                std::span<const std::uint64_t> refinements,
                                                NoiseStream& stream, bool zero_noise = false);

}  // namespace tamed
