#include "tamed_ergo/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tamed_ergo/error.hpp"

namespace tamed {

void SchemeParams::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidArgument("scheme", "dt must be positive");
  }
  if (!(dt_cap > 0.0) || !std::isfinite(dt_cap)) {
    throw InvalidArgument("scheme", "dt_cap must be positive");
  }
  if (dt > dt_cap) {
    throw InvalidArgument("scheme", "dt must not exceed dt_cap");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("scheme", "alpha must be positive");
  }
}

std::string_view to_string(StepKind kind) noexcept {
  return kind == StepKind::tamed ? "tamed" : "euler";
}

StepKind parse_step_kind(std::string_view text) {
  if (text == "tamed") return StepKind::tamed;
  if (text == "euler") return StepKind::euler;
  throw InvalidArgument("scheme", "unknown scheme '" + std::string(text) + "'");
}

void step_into(StepKind kind, std::span<const double> x, std::span<const double> fx, double dt,
               double alpha, std::span<const double> noise_term, std::span<double> out) noexcept {
  double factor = dt;
  if (kind == StepKind::tamed) {
    factor = dt / (1.0 + alpha * dt * norm(fx));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] + factor * fx[i] + noise_term[i];
  }
}

namespace {

void check_step_args(std::span<const double> x, std::span<const double> fx,
                     std::span<const double> noise_term) {
  if (fx.size() != x.size() || noise_term.size() != x.size()) {
    throw InvalidArgument("scheme", "state, drift and noise term differ in length");
  }
}

}  // namespace

Vector tamed_step(std::span<const double> x, std::span<const double> fx, const SchemeParams& params,
                  std::span<const double> noise_term) {
  check_step_args(x, fx, noise_term);
  Vector out(x.size());
  step_into(StepKind::tamed, x, fx, params.dt, params.alpha, noise_term, out);
  return out;
}

Vector euler_step(std::span<const double> x, std::span<const double> fx, const SchemeParams& params,
                  std::span<const double> noise_term) {
  check_step_args(x, fx, noise_term);
  Vector out(x.size());
  step_into(StepKind::euler, x, fx, params.dt, params.alpha, noise_term, out);
  return out;
}

Vector modified_drift(const Problem& problem, std::span<const double> x, double alpha) {
  if (!(alpha > 0.0)) {
    throw InvalidArgument("scheme", "alpha must be positive");
  }
  Vector f = eval_drift(problem, x);
  const double scale = 1.0 / (1.0 + alpha * norm(f));
  for (double& v : f) {
    v *= scale;
  }
  return f;
}

namespace {

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

// Draws `refinement` increments of size dt / refinement and sums them.
void draw_noise(NoiseStream& stream, double fine_dt, std::uint64_t refinement,
                std::span<double> increment, std::span<double> scratch) {
  std::fill(increment.begin(), increment.end(), 0.0);
  for (std::uint64_t r = 0; r < refinement; ++r) {
    stream.gaussian_increments(fine_dt, scratch);
    accumulate_increment(increment, scratch);
  }
}

}  // namespace

PathResult simulate_path(const Problem& problem, const SchemeParams& params, StepKind kind,
                         std::span<const double> x0, NoiseStream& stream,
                         const PathOptions& options) {
  params.validate();
  const std::size_t d = problem.dim();
  if (x0.size() != d) {
    throw InvalidArgument("scheme", "x0 dimension differs from problem dimension");
  }
  if (!all_finite(x0)) {
    throw InvalidArgument("scheme", "x0 must be finite");
  }
  if (options.noise_refinement == 0) {
    throw InvalidArgument("scheme", "noise refinement must be at least 1");
  }
  const auto& cps = options.checkpoints;
  if (!std::is_sorted(cps.begin(), cps.end()) ||
      (!cps.empty() && cps.back() > params.n_steps)) {
    throw InvalidArgument("scheme", "checkpoints must be sorted and within [0, n_steps]");
  }

  const std::size_t k = problem.noise().channels();
  const double fine_dt = params.dt / static_cast<double>(options.noise_refinement);
  Vector x(x0.begin(), x0.end());
  Vector fx(d);
  Vector next(d);
  Vector noise_term(d, 0.0);
  Vector increment(k);
  Vector scratch(k);

  PathResult result;
  result.sup_norm = norm(x);
  std::size_t cp = 0;
  auto record = [&](std::uint64_t n) {
    while (cp < cps.size() && cps[cp] == n) {
      result.recorded_states.emplace_back(n, x);
      ++cp;
    }
  };
  record(0);

  const double displacement_cap = 1.0 / params.alpha;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  for (std::uint64_t n = 0; n < params.n_steps; ++n) {
    problem.drift(x, fx);
    if (!all_finite(fx)) {
      result.exploded_at = n;
      break;
    }
    if (!options.zero_noise) {
      draw_noise(stream, fine_dt, options.noise_refinement, increment, scratch);
      problem.noise().apply(increment, noise_term);
    }
    step_into(kind, x, fx, params.dt, params.alpha, noise_term, next);

    if (options.audit_displacement) {
      double disp2 = 0.0;
      double scale = 1.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double delta = next[i] - x[i] - noise_term[i];
        disp2 += delta * delta;
        scale += std::abs(x[i]) + std::abs(noise_term[i]) + std::abs(next[i]);
      }
      const double disp = std::sqrt(disp2);
      result.max_drift_displacement = std::max(result.max_drift_displacement, disp);
      const double bound = std::min(params.dt * norm(fx), displacement_cap);
      if (disp > bound + 8.0 * eps * scale) {
        ++result.displacement_violations;
      }
    }

    x.swap(next);
    result.steps_taken = n + 1;
    const double nx = norm(x);
    if (!std::isfinite(nx) || nx > kOverflowThreshold) {
      result.exploded_at = n + 1;
      break;
    }
    result.sup_norm = std::max(result.sup_norm, nx);
    record(n + 1);
  }
  result.final_state = std::move(x);
  return result;
}

std::vector<LevelFinal> simulate_coupled_levels(const Problem& problem, double base_dt,
                                                std::uint64_t n_base_steps, double alpha,
                                                StepKind kind, std::span<const double> x0,
                                                std::span<const std::uint64_t> refinements,
                                                NoiseStream& stream, bool zero_noise) {
  const std::size_t d = problem.dim();
  if (x0.size() != d) {
    throw InvalidArgument("scheme", "x0 dimension differs from problem dimension");
  }
  if (!(base_dt > 0.0)) {
    throw InvalidArgument("scheme", "base dt must be positive");
  }
  for (auto r : refinements) {
    if (r == 0 || n_base_steps % r != 0) {
      throw InvalidArgument("scheme", "every refinement must divide the base step count");
    }
  }
  const std::size_t k = problem.noise().channels();
  const std::size_t levels = refinements.size();

  struct Level {
    Vector x;
    Vector acc;
    double dt;
    bool exploded = false;
  };
  std::vector<Level> state(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    state[l] = Level{Vector(x0.begin(), x0.end()), Vector(k, 0.0),
                     base_dt * static_cast<double>(refinements[l])};
  }
  Vector draw(k);
  Vector fx(d);
  Vector noise_term(d, 0.0);

  for (std::uint64_t n = 0; n < n_base_steps; ++n) {
    if (!zero_noise) {
      stream.gaussian_increments(base_dt, draw);
    }
    for (std::size_t l = 0; l < levels; ++l) {
      Level& lv = state[l];
      if (lv.exploded) continue;
      if (!zero_noise) accumulate_increment(lv.acc, draw);
      if ((n + 1) % refinements[l] != 0) continue;

      problem.drift(lv.x, fx);
      if (!all_finite(fx)) {
        lv.exploded = true;
        continue;
      }
      problem.noise().apply(lv.acc, noise_term);
      step_into(kind, lv.x, fx, lv.dt, alpha, noise_term, lv.x);
      std::fill(lv.acc.begin(), lv.acc.end(), 0.0);
      const double nx = norm(lv.x);
      if (!std::isfinite(nx) || nx > kOverflowThreshold) {
        lv.exploded = true;
      }
    }
  }
  std::vector<LevelFinal> out;
  out.reserve(levels);
  for (auto& lv : state) {
    out.push_back(LevelFinal{std::move(lv.x), lv.exploded});
  }
  return out;
}

}  // namespace tamed
