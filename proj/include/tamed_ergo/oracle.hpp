#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "tamed_ergo/model.hpp"
#include "tamed_ergo/montecarlo.hpp"

namespace tamed {

/// Moment of the OU stationary law N(0, sigma^2 / (2 gamma)); zero for odd orders.
double ou_stationary_moment(double gamma, double sigma, unsigned order);

/// E[(mean + sd Z)^order], Z standard normal.
double gaussian_raw_moment(double mean, double sd, unsigned order);

/// Closed-form E[phi(X(T))] for the 1D OU problem started at x0; an infinite
/// T gives the stationary average. Throws OracleUnavailable when phi is not a
/// polynomial in x (odd moments of |x|).
double ou_expectation(const OuCoefficients& ou, const Observable& obs, double x0, double T);

enum class QuadratureRule { trapezoid, simpson };

struct QuadratureGrid {
  double lower = -10.0;
  double upper = 10.0;
  std::size_t n_nodes = 4001;
  QuadratureRule rule = QuadratureRule::simpson;

  /// lower < upper, n_nodes >= 9, odd for Simpson.
  void validate() const;
};

/// Boundary density relative to the maximum must be below this.
inline constexpr double kBoundaryMassRatio = 1e-12;

/// int phi exp(-2V/s^2) / int exp(-2V/s^2) on the grid for a 1D gradient
/// problem, shifted by the maximal log-density before exponentiation.
/// Throws GridTooNarrow when the boundary density is not negligible.
double quadrature_invariant_average(const Problem& problem, const Observable& obs,
                                    double noise_scale, const QuadratureGrid& grid);

/// Fine-step stand-in for E[phi(X(T))]: the tamed scheme at dt_ref. Streams
/// are indexed at dt_ref resolution, so a run at dt = r dt_ref with
/// noise_refinement r reuses the same Brownian paths.
Estimate reference_finite_time(const Problem& problem, const Observable& obs,
                               std::span<const double> x0, double T, double dt_ref,
                               std::uint64_t n_paths, MasterSeed master,
                               const EngineOptions& options = {});

struct InvariantReference {
  double value = 0.0;
  std::string provenance;  ///< "closed-form" or "quadrature"
};

/// Closed form for OU, Simpson quadrature for other 1D gradient problems
/// (grid widened until the boundary test passes). Throws OracleUnavailable otherwise.
InvariantReference invariant_reference(const Problem& problem, const Observable& obs);

}  // namespace tamed
