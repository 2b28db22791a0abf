#include "tamed_ergo/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tamed_ergo/error.hpp"
#include "tamed_ergo/noise.hpp"

namespace tamed {

double norm(std::span<const double> x) noexcept { return std::sqrt(dot(x, x)); }

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

// NoiseModel ---------------------------------------------------------------

NoiseModel::NoiseModel(std::size_t dim, std::vector<Vector> columns)
    : dim_(dim), columns_(std::move(columns)) {
  if (dim_ == 0) {
    throw InvalidArgument("model", "noise dimension must be positive");
  }
  if (columns_.empty()) {
    throw InvalidArgument("model", "noise needs at least one channel");
  }
  bool any_nonzero = false;
  for (const auto& c : columns_) {
    if (c.size() != dim_) {
      throw InvalidArgument("model", "noise column dimension differs from problem dimension");
    }
    for (double v : c) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("model", "noise column has a non-finite entry");
      }
      any_nonzero = any_nonzero || v != 0.0;
    }
  }
  if (!any_nonzero) {
    throw InvalidArgument("model", "degenerate noise: every column is zero");
  }
  const std::size_t k = columns_.size();
  amplitude_.assign(dim_ * k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < dim_; ++i) {
      amplitude_[i * k + j] = columns_[j][i];
    }
  }
}

NoiseModel NoiseModel::isotropic(std::size_t dim, double scale) {
  std::vector<Vector> cols(dim, Vector(dim, 0.0));
  for (std::size_t i = 0; i < dim; ++i) {
    cols[i][i] = scale;
  }
  return NoiseModel(dim, std::move(cols));
}

void NoiseModel::apply(std::span<const double> increments, std::span<double> out) const noexcept {
  const std::size_t k = columns_.size();
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      s += amplitude_[i * k + j] * increments[j];
    }
    out[i] = s;
  }
}

std::optional<double> NoiseModel::isotropic_scale() const noexcept {
  if (columns_.size() != dim_) {
    return std::nullopt;
  }
  const double s = columns_[0][0];
  for (std::size_t j = 0; j < dim_; ++j) {
    for (std::size_t i = 0; i < dim_; ++i) {
      if (columns_[j][i] != (i == j ? s : 0.0)) {
        return std::nullopt;
      }
    }
  }
  return s;
}

// Problem ------------------------------------------------------------------

Problem::Problem(std::string name, std::size_t dim, DriftFn drift, double gamma,
                 unsigned growth_degree, NoiseModel noise, std::optional<PotentialFn> potential,
                 std::optional<OuCoefficients> ou)
    : name_(std::move(name)),
      dim_(dim),
      drift_(std::move(drift)),
      gamma_(gamma),
      growth_degree_(growth_degree),
      noise_(std::move(noise)),
      potential_(std::move(potential)),
      ou_(ou) {
  if (dim_ == 0) {
    throw InvalidArgument("model", "dimension must be positive");
  }
  if (!drift_) {
    throw InvalidArgument("model", "drift evaluator is empty");
  }
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) {
    throw InvalidArgument("model", "gamma must be positive");
  }
  if (noise_.dim() != dim_) {
    throw InvalidArgument("model", "noise dimension differs from problem dimension");
  }
}

double Problem::potential(std::span<const double> x) const {
  if (!potential_) {
    throw NotGradientProblem("model", "problem '" + name_ + "' has no potential");
  }
  return (*potential_)(x);
}

Problem Problem::with_growth_degree(unsigned q) const {
  Problem copy = *this;
  copy.growth_degree_ = q;
  return copy;
}

Problem ou_problem(double gamma, double sigma) {
  return Problem(
      "ou", 1, [gamma](std::span<const double> x, std::span<double> out) { out[0] = -gamma * x[0]; },
      gamma, 1, NoiseModel::isotropic(1, sigma),
      PotentialFn([gamma](std::span<const double> x) { return 0.5 * gamma * x[0] * x[0]; }),
      OuCoefficients{gamma, sigma});
}

Problem cubic_problem(double sigma) {
  return Problem(
      "cubic", 1,
      [](std::span<const double> x, std::span<double> out) { out[0] = -x[0] - x[0] * x[0] * x[0]; },
      1.0, 3, NoiseModel::isotropic(1, sigma), PotentialFn([](std::span<const double> x) {
        const double x2 = x[0] * x[0];
        return 0.5 * x2 + 0.25 * x2 * x2;
      }));
}

Problem rotation_problem(double epsilon, double sigma) {
  return Problem(
      "rotation", 2,
      [epsilon](std::span<const double> x, std::span<double> out) {
        out[0] = -x[0] - epsilon * x[1];
        out[1] = -x[1] + epsilon * x[0];
      },
      1.0, 1, NoiseModel::isotropic(2, sigma));
}

Problem polynomial_problem(std::vector<double> coefficients, double gamma, unsigned growth_degree,
                           double sigma) {
  if (coefficients.empty()) {
    throw InvalidArgument("model", "polynomial drift needs at least one coefficient");
  }
  auto drift = [c = coefficients](std::span<const double> x, std::span<double> out) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
      acc = acc * x[0] + *it;
    }
    out[0] = acc;
  };
  // V(x) = -sum_j c_j x^{j+1} / (j+1)
  auto potential = [c = coefficients](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t j = c.size(); j-- > 0;) {
      acc = acc * x[0] - c[j] / static_cast<double>(j + 1);
    }
    return acc * x[0];
  };
  return Problem("polynomial", 1, std::move(drift), gamma, growth_degree,
                 NoiseModel::isotropic(1, sigma), PotentialFn(std::move(potential)));
}

Vector eval_drift(const Problem& problem, std::span<const double> x) {
  if (x.size() != problem.dim()) {
    throw InvalidArgument("model", "state dimension differs from problem dimension");
  }
  Vector out(problem.dim());
  problem.drift(x, out);
  for (double v : out) {
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "drift overflow at x = (";
      for (std::size_t i = 0; i < x.size(); ++i) {
        msg << (i ? ", " : "") << x[i];
      }
      msg << ")";
      throw DriftOverflow(Vector(x.begin(), x.end()), msg.str());
    }
  }
  return out;
}

// Assumption diagnostics -----------------------------------------------------

double one_sided_ratio(const Problem& problem, std::span<const double> x1,
                       std::span<const double> x2) {
  const Vector f1 = eval_drift(problem, x1);
  const Vector f2 = eval_drift(problem, x2);
  Vector df(x1.size());
  Vector dx(x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i) {
    df[i] = f2[i] - f1[i];
    dx[i] = x2[i] - x1[i];
  }
  return dot(df, dx) / dot(dx, dx);
}

double growth_ratio(const Problem& problem, std::span<const double> x) {
  const Vector f = eval_drift(problem, x);
  return norm(f) / (1.0 + std::pow(norm(x), static_cast<double>(problem.growth_degree())));
}

namespace {

// Uniform point in the centered ball: direction from d normals, radius R u^{1/d}.
Vector ball_point(const CounterUniform& rng, std::uint64_t sample, std::size_t dim,
                  double radius) {
  const std::uint64_t base = sample * (dim + 1);
  Vector x(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    x[c] = rng.normal_at(base + c);
  }
  const double n = norm(x);
  if (n == 0.0) {
    return x;
  }
  const double r = radius * std::pow(rng.at(base + dim), 1.0 / static_cast<double>(dim));
  for (double& v : x) {
    v *= r / n;
  }
  return x;
}

void check_sampling_args(std::size_t n, double radius) {
  if (n == 0) {
    throw InvalidArgument("model", "sample count must be at least 1");
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidArgument("model", "sampling radius must be positive and finite");
  }
}

}  // namespace

AssumptionReport check_one_sided(const Problem& problem, std::size_t n_pairs,
                                 double sampling_radius, std::uint64_t seed) {
  check_sampling_args(n_pairs, sampling_radius);
  const CounterUniform rng(seed, 1);
  AssumptionReport report;
  report.kind = AssumptionKind::one_sided;
  report.sampling_radius = sampling_radius;
  report.seed = seed;
  report.worst_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_pairs; ++i) {
    Vector x1 = ball_point(rng, 2 * i, problem.dim(), sampling_radius);
    Vector x2 = ball_point(rng, 2 * i + 1, problem.dim(), sampling_radius);
    Vector dx(x1.size());
    for (std::size_t c = 0; c < dx.size(); ++c) {
      dx[c] = x2[c] - x1[c];
    }
    if (norm(dx) < kDegeneratePairDistance) {
      continue;
    }
    const double r = one_sided_ratio(problem, x1, x2);
    ++report.samples_tested;
    if (r > report.worst_ratio) {
      report.worst_ratio = r;
      report.witness = std::move(x1);
      report.witness_second = std::move(x2);
    }
  }
  if (report.samples_tested == 0) {
    throw InsufficientSamples("model", "every sampled pair was degenerate");
  }
  report.passed = report.worst_ratio <= -problem.gamma() * (1.0 - kOneSidedTolerance);
  if (!report.passed) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "counterexample: ratio " << report.worst_ratio << " exceeds -gamma = "
        << -problem.gamma();
    report.notes = msg.str();
  }
  return report;
}

AssumptionReport check_poly_growth(const Problem& problem, std::size_t n_points,
                                   double sampling_radius, std::uint64_t seed) {
  check_sampling_args(n_points, sampling_radius);
  const CounterUniform rng(seed, 2);
  AssumptionReport report;
  report.kind = AssumptionKind::poly_growth;
  report.sampling_radius = sampling_radius;
  report.seed = seed;
  report.worst_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_points; ++i) {
    Vector x = ball_point(rng, i, problem.dim(), sampling_radius);
    const double r = growth_ratio(problem, x);
    ++report.samples_tested;
    if (r > report.worst_ratio) {
      report.worst_ratio = r;
      report.witness = std::move(x);
    }
  }
  report.passed = std::isfinite(report.worst_ratio);
  if (report.worst_ratio > kGrowthNoteThreshold) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "growth ratio " << report.worst_ratio << " exceeds " << kGrowthNoteThreshold
        << "; declared degree q = " << problem.growth_degree() << " may be too small";
    report.notes = msg.str();
  }
  return report;
}

double gibbs_log_density(const Problem& problem, std::span<const double> x, double noise_scale) {
  if (!problem.has_potential()) {
    throw NotGradientProblem("model", "problem '" + problem.name() + "' has no potential");
  }
  const auto scale = problem.noise().isotropic_scale();
  if (!scale || std::abs(*scale - noise_scale) > 1e-12 * std::max(1.0, std::abs(noise_scale))) {
    throw NotGradientProblem("model", "noise is not isotropic with the requested scale");
  }
  if (!(noise_scale > 0.0)) {
    throw InvalidArgument("model", "noise scale must be positive");
  }
  return -2.0 * problem.potential(x) / (noise_scale * noise_scale);
}

}  // namespace tamed
