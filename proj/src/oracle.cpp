#include "tamed_ergo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tamed_ergo/error.hpp"

namespace tamed {

namespace {

double double_factorial_odd(unsigned k) noexcept {
  // (k-1)!! for even k
  double r = 1.0;
  for (unsigned j = k; j > 1; j -= 2) r *= static_cast<double>(j - 1);
  return r;
}

double binomial(unsigned n, unsigned k) noexcept {
  double r = 1.0;
  for (unsigned j = 1; j <= k; ++j) {
    r = r * static_cast<double>(n - k + j) / static_cast<double>(j);
  }
  return r;
}

}  // namespace

double ou_stationary_moment(double gamma, double sigma, unsigned order) {
  if (!(gamma > 0.0) || !(sigma > 0.0)) {
    throw InvalidArgument("oracle", "gamma and sigma must be positive");
  }
  if (order % 2 != 0) return 0.0;
  const double variance = sigma * sigma / (2.0 * gamma);
  return std::pow(variance, order / 2) * double_factorial_odd(order);
}

double gaussian_raw_moment(double mean, double sd, unsigned order) {
  double total = 0.0;
  for (unsigned k = 0; k <= order; k += 2) {
    total += binomial(order, k) * std::pow(mean, order - k) * std::pow(sd, k) *
             double_factorial_odd(k);
  }
  return total;
}

double ou_expectation(const OuCoefficients& ou, const Observable& obs, double x0, double T) {
  double mean = 0.0;
  double variance = ou.sigma * ou.sigma / (2.0 * ou.rate);
  if (std::isfinite(T)) {
    mean = x0 * std::exp(-ou.rate * T);
    variance *= -std::expm1(-2.0 * ou.rate * T);
  }
  const double sd = std::sqrt(variance);
  switch (obs.kind) {
    case Observable::Kind::moment:
      if (obs.order % 2 != 0) {
        throw OracleUnavailable("oracle", "odd moments of |x| have no closed form here");
      }
      return gaussian_raw_moment(mean, sd, obs.order);
    case Observable::Kind::coordinate_moment:
      if (obs.index != 0) {
        throw OracleUnavailable("oracle", "OU problem is one-dimensional");
      }
      return gaussian_raw_moment(mean, sd, obs.order);
    case Observable::Kind::custom_polynomial: {
      double total = 0.0;
      for (std::size_t j = 0; j < obs.coefficients.size(); ++j) {
        total += obs.coefficients[j] * gaussian_raw_moment(mean, sd, static_cast<unsigned>(j));
      }
      return total;
    }
  }
  return 0.0;
}

void QuadratureGrid::validate() const {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw InvalidArgument("oracle", "quadrature grid needs lower < upper");
  }
  if (n_nodes < 9) {
    throw InvalidArgument("oracle", "quadrature grid needs at least 9 nodes");
  }
  if (rule == QuadratureRule::simpson && n_nodes % 2 == 0) {
    throw InvalidArgument("oracle", "Simpson's rule needs an odd node count");
  }
}

double quadrature_invariant_average(const Problem& problem, const Observable& obs,
                                    double noise_scale, const QuadratureGrid& grid) {
  grid.validate();
  if (problem.dim() != 1) {
    throw NotGradientProblem("oracle", "quadrature oracle is one-dimensional");
  }
  const std::size_t n = grid.n_nodes;
  const double h = (grid.upper - grid.lower) / static_cast<double>(n - 1);
  std::vector<double> log_density(n);
  std::vector<double> xs(n);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = i + 1 == n ? grid.upper : grid.lower + h * static_cast<double>(i);
    const double x[1] = {xs[i]};
    log_density[i] = gibbs_log_density(problem, x, noise_scale);
    max_log = std::max(max_log, log_density[i]);
  }
  const double boundary = std::max(log_density.front(), log_density.back()) - max_log;
  if (!(boundary < std::log(kBoundaryMassRatio))) {
    throw GridTooNarrow("oracle", "boundary density is not negligible; widen the grid");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    if (grid.rule == QuadratureRule::simpson) {
      w = (i == 0 || i + 1 == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    } else {
      w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    }
    const double p = w * std::exp(log_density[i] - max_log);
    const double x[1] = {xs[i]};
    num += p * obs(x);
    den += p;
  }
  return num / den;
}

Estimate reference_finite_time(const Problem& problem, const Observable& obs,
                               std::span<const double> x0, double T, double dt_ref,
                               std::uint64_t n_paths, MasterSeed master,
                               const EngineOptions& options) {
  if (!(dt_ref > 0.0) || !(T >= 0.0)) {
    throw InvalidArgument("oracle", "reference needs dt_ref > 0 and T >= 0");
  }
  const double ratio = T / dt_ref;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidArgument("oracle", "T must be an integer multiple of dt_ref");
  }
  SchemeParams params;
  params.dt = dt_ref;
  params.n_steps = static_cast<std::uint64_t>(steps);
  return estimate_observable(problem, params, StepKind::tamed, x0, obs, n_paths, master, options);
}

InvariantReference invariant_reference(const Problem& problem, const Observable& obs) {
  if (problem.ou()) {
    return {ou_expectation(*problem.ou(), obs, 0.0, std::numeric_limits<double>::infinity()),
            "closed-form"};
  }
  const auto scale = problem.noise().isotropic_scale();
  if (problem.dim() != 1 || !problem.has_potential() || !scale) {
    throw OracleUnavailable("oracle",
                            "no invariant reference for problem '" + problem.name() + "'");
  }
  QuadratureGrid grid;
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      return {quadrature_invariant_average(problem, obs, *scale, grid), "quadrature"};
    } catch (const GridTooNarrow&) {
      grid.lower *= 2.0;
      grid.upper *= 2.0;
      grid.n_nodes = 2 * grid.n_nodes - 1;
    }
  }
  throw OracleUnavailable("oracle", "invariant density does not decay on any tried grid");
}

}  // namespace tamed
