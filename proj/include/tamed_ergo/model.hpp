#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tamed {

using Vector = std::vector<double>;

/// Drift evaluator: writes f(x) into `out` (both of length dim).
using DriftFn = std::function<void(std::span<const double> x, std::span<double> out)>;
using PotentialFn = std::function<double(std::span<const double> x)>;

double norm(std::span<const double> x) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;

/// Additive noise sigma dB(t) = sum_k sigma_k dbeta^k(t).
class NoiseModel {
 public:
  /// Throws InvalidArgument on ragged columns or when every column is zero.
  NoiseModel(std::size_t dim, std::vector<Vector> columns);

  /// sigma = scale * Identity (K = dim).
  static NoiseModel isotropic(std::size_t dim, double scale);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t channels() const noexcept { return columns_.size(); }
  const std::vector<Vector>& columns() const noexcept { return columns_; }

  /// Row-major dim x K arrangement of the columns.
  double amplitude(std::size_t row, std::size_t channel) const noexcept {
    return amplitude_[row * columns_.size() + channel];
  }

  /// out = sum_k sigma_k * increments[k].
  void apply(std::span<const double> increments, std::span<double> out) const noexcept;

  /// The common scale s when sigma = s * Identity, nothing otherwise.
  std::optional<double> isotropic_scale() const noexcept;

 private:
  std::size_t dim_;
  std::vector<Vector> columns_;
  std::vector<double> amplitude_;
};

/// Closed-form coefficients of dX = -rate X dt + sigma dB (d = 1).
struct OuCoefficients {
  double rate;
  double sigma;
};

/// An SDE instance dX = f(X) dt + sigma dB with declared structural constants.
/// Immutable once built; safe to share between threads.
class Problem {
 public:
  Problem(std::string name, std::size_t dim, DriftFn drift, double gamma,
          unsigned growth_degree, NoiseModel noise,
          std::optional<PotentialFn> potential = std::nullopt,
          std::optional<OuCoefficients> ou = std::nullopt);

  const std::string& name() const noexcept { return name_; }
  std::size_t dim() const noexcept { return dim_; }
  double gamma() const noexcept { return gamma_; }
  unsigned growth_degree() const noexcept { return growth_degree_; }
  const NoiseModel& noise() const noexcept { return noise_; }
  bool has_potential() const noexcept { return potential_.has_value(); }
  const std::optional<OuCoefficients>& ou() const noexcept { return ou_; }

  /// Unchecked drift evaluation into a caller-owned buffer (hot path).
  void drift(std::span<const double> x, std::span<double> out) const { drift_(x, out); }

  /// Throws NotGradientProblem when no potential is attached.
  double potential(std::span<const double> x) const;

  /// Same problem with a different declared growth degree q.
  Problem with_growth_degree(unsigned q) const;

 private:
  std::string name_;
  std::size_t dim_;
  DriftFn drift_;
  double gamma_;
  unsigned growth_degree_;
  NoiseModel noise_;
  std::optional<PotentialFn> potential_;
  std::optional<OuCoefficients> ou_;
};

// Catalog.

/// f(x) = -gamma x, sigma = sigma (d = 1). V(x) = gamma x^2 / 2.
Problem ou_problem(double gamma = 1.0, double sigma = 1.0);

/// f(x) = -x - x^3 (d = 1), gamma = 1, q = 3. V(x) = x^2/2 + x^4/4. The default
/// sigma = sqrt(2) makes the invariant density proportional to exp(-V).
Problem cubic_problem(double sigma = 1.4142135623730951);

/// f(x) = -x + epsilon * (-x2, x1) (d = 2), gamma = 1, q = 1, sigma * Identity.
Problem rotation_problem(double epsilon = 0.5, double sigma = 1.0);

/// f(x) = sum_j c_j x^j (d = 1) with declared gamma and q.
Problem polynomial_problem(std::vector<double> coefficients, double gamma,
                           unsigned growth_degree, double sigma = 1.0);

/// Checked f(x). Throws DriftOverflow when the result is not finite.
Vector eval_drift(const Problem& problem, std::span<const double> x);

enum class AssumptionKind { one_sided, poly_growth };

struct AssumptionReport {
  AssumptionKind kind = AssumptionKind::one_sided;
  std::size_t samples_tested = 0;
  double worst_ratio = 0.0;
  bool passed = false;
  Vector witness;         ///< x1 (one_sided) or x (poly_growth)
  Vector witness_second;  ///< x2 for one_sided, empty otherwise
  double sampling_radius = 0.0;
  std::uint64_t seed = 0;
  std::string notes;
};

/// <f(x2) - f(x1), x2 - x1> / |x2 - x1|^2.
double one_sided_ratio(const Problem& problem, std::span<const double> x1,
                       std::span<const double> x2);

/// |f(x)| / (1 + |x|^q).
double growth_ratio(const Problem& problem, std::span<const double> x);

inline constexpr double kOneSidedTolerance = 1e-6;
inline constexpr double kDegeneratePairDistance = 1e-12;
inline constexpr double kGrowthNoteThreshold = 1e3;

/// Sampling falsifier for the one-sided Lipschitz condition with the declared gamma.
AssumptionReport check_one_sided(const Problem& problem, std::size_t n_pairs,
                                 double sampling_radius, std::uint64_t seed);

/// Sampling estimate of sup |f(x)| / (1 + |x|^q) over the ball.
AssumptionReport check_poly_growth(const Problem& problem, std::size_t n_points,
                                   double sampling_radius, std::uint64_t seed);

/// Unnormalized stationary log-density -2 V(x) / noise_scale^2 for gradient
/// problems with isotropic noise noise_scale * Identity.
double gibbs_log_density(const Problem& problem, std::span<const double> x,
                         double noise_scale);

}  // namespace tamed
