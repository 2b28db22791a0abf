#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tamed_ergo/experiments.hpp"
#include "tamed_ergo/montecarlo.hpp"
#include "tamed_ergo/oracle.hpp"

using namespace tamed;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SchemeParams params(double dt, std::uint64_t n) {
  SchemeParams p;
  p.dt = dt;
  p.n_steps = n;
  return p;
}

EngineOptions single() {
  EngineOptions e;
  e.workers = 1;
  return e;
}

Verdict ou_second_moment() {
  const auto t0 = std::chrono::steady_clock::now();
  const Estimate e = estimate_observable(ou_problem(1.0, 1.0), params(0.01, 1000), StepKind::tamed, Vector{0.0},
                                         Observable::coordinate_moment(0, 2), 100000, MasterSeed{1}, single());
  const double elapsed = seconds_since(t0);
  const double err = std::abs(e.mean - 0.5);
  const bool ok = err <= 3.0 * e.std_error + 0.02 && elapsed < 60.0 && e.n_exploded == 0;
  return {ok, fmt("mean %.6f stderr %.2e |err| %.2e, %.1f s on one worker", e.mean, e.std_error, err, elapsed)};
}

Verdict cubic_second_moment() {
  const Problem cubic = cubic_problem();
  const Observable obs = Observable::moment(2);
  const double quad = invariant_reference(cubic, obs).value;

  // Independent check of the oracle: rejection sampling from exp(-V).
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  double sum = 0.0;
  std::uint64_t accepted = 0;
  for (int i = 0; i < 40000000; ++i) {
    const double x = normal(rng);
    if (uniform(rng) < std::exp(-0.25 * x * x * x * x)) {
      sum += x * x;
      ++accepted;
    }
  }
  const double sampled = sum / static_cast<double>(accepted);
  bool ok = std::abs(sampled - quad) < 5e-4;
  std::string detail = fmt("oracle %.10f (rejection %.5f)", quad, sampled);
  for (double dt : {0.02, 0.01}) {
    const auto n = static_cast<std::uint64_t>(std::llround(10.0 / dt));
    const Estimate e = estimate_observable(cubic, params(dt, n), StepKind::tamed, Vector{0.0}, obs, 100000,
                                           MasterSeed{2});
    const double err = std::abs(e.mean - quad);
    ok = ok && err <= 3.0 * e.std_error + 5.0 * dt;
    detail += fmt("; dt %.2f: mean %.5f |err| %.2e", dt, e.mean, err);
  }
  return {ok, detail};
}

Verdict weak_order() {
  const Problem ou = ou_problem(1.0, 1.0);
  const Observable obs = Observable::moment(2);
  const std::vector<double> dts{0.2, 0.1, 0.05, 0.025};
  const double exact = ou_expectation(*ou.ou(), obs, 0.0, 4.0);
  const WeakErrorResult r = weak_error_sweep(ou, obs, Vector{0.0}, 4.0, dts, 1000000, MasterSeed{3}, exact);
  std::string detail = fmt("slope %.4f over %zu rows; errors", r.fitted_slope, r.rows_used);
  for (const auto& row : r.rows) detail += fmt(" %.4g", *row.abs_error);
  return {r.fitted_slope >= 0.7 && r.fitted_slope <= 1.3, detail};
}

Verdict ergodic_decomposition() {
  const Problem ou = ou_problem(1.0, 1.0);
  const Observable obs = Observable::moment(2);
  std::vector<double> horizons{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  for (double h = 6.0; h <= 16.0; h += 1.0) horizons.push_back(h);
  const double plateau_start = 6.0;

  const auto curve = [&](double dt, std::uint64_t refinement) {
    std::vector<std::uint64_t> steps;
    for (double h : horizons) steps.push_back(static_cast<std::uint64_t>(std::llround(h / dt)));
    SweepOptions opt;
    // Both step sizes see the same Brownian paths.
    opt.engine.noise_refinement = refinement;
    return ergodic_error_curve(ou, obs, Vector{3.0}, dt, steps, 200000, MasterSeed{4}, 0.5, plateau_start, opt);
  };
  const ErgodicResult coarse = curve(0.01, 2);
  const ErgodicResult fine = curve(0.005, 1);
  const double ratio = fine.plateau_error / coarse.plateau_error;
  const bool decays = coarse.decay_rate && fine.decay_rate && *coarse.decay_rate <= -1.4 && *fine.decay_rate <= -1.4;
  const bool ok = decays && ratio >= 0.3 && ratio <= 0.8;
  return {ok, fmt("decay rate %.3f / %.3f, plateau %.3e -> %.3e (ratio %.3f)",
                  coarse.decay_rate.value_or(NAN), fine.decay_rate.value_or(NAN), coarse.plateau_error,
                  fine.plateau_error, ratio)};
}

Verdict stability() {
  const Problem cubic = cubic_problem();
  const DivergenceResult quiet = divergence_demo(cubic, Vector{100.0}, 0.5, 100000, MasterSeed{5}, true);
  const DivergenceResult noisy = divergence_demo(cubic, Vector{100.0}, 0.5, 100000, MasterSeed{5}, false);
  const double sup_bound = 100.0 + 10.0 * std::sqrt(0.5 * 100000.0);
  const bool ok = quiet.euler_exploded_at && *quiet.euler_exploded_at <= 3 &&
                  noisy.tamed_displacement_violations == 0 && noisy.tamed_max_drift_displacement <= 1.0 &&
                  noisy.tamed_sup_norm <= sup_bound && noisy.steps == 100000;
  return {ok, fmt("euler exploded at step %llu; tamed max displacement %.6f, %llu violations, sup %.3f <= %.1f",
                  static_cast<unsigned long long>(quiet.euler_exploded_at.value_or(0)),
                  noisy.tamed_max_drift_displacement,
                  static_cast<unsigned long long>(noisy.tamed_displacement_violations), noisy.tamed_sup_norm,
                  sup_bound)};
}

Verdict moment_flatness() {
  const std::vector<double> times{1.0, 10.0, 100.0};
  const auto rows =
      estimate_moments_at_times(cubic_problem(), params(0.01, 10000), Vector{2.0}, 4, times, 10000, MasterSeed{6});
  double lo = INFINITY, hi = 0.0;
  std::string detail = "E|X|^4 at T=1,10,100:";
  for (const auto& r : rows) {
    lo = std::min(lo, r.estimate.mean);
    hi = std::max(hi, r.estimate.mean);
    detail += fmt(" %.4f", r.estimate.mean);
  }
  detail += fmt("; max/min %.3f", hi / lo);
  return {hi / lo <= 2.0, detail};
}

Verdict cost_schedule_law() {
  const double eps[] = {0.1, 0.01, 0.001};
  std::uint64_t n[3];
  double law[3];
  for (int i = 0; i < 3; ++i) {
    n[i] = cost_schedule(eps[i], 1).n_steps;
    const double l = std::abs(std::log(eps[i]));
    law[i] = l * l / eps[i];
  }
  bool ok = true;
  std::string detail = fmt("n_steps %llu %llu %llu; ratios", static_cast<unsigned long long>(n[0]),
                           static_cast<unsigned long long>(n[1]), static_cast<unsigned long long>(n[2]));
  for (int i = 0; i < 2; ++i) {
    const double got = static_cast<double>(n[i + 1]) / static_cast<double>(n[i]);
    const double want = law[i + 1] / law[i];
    ok = ok && std::abs(got / want - 1.0) <= 0.02;
    detail += fmt(" %.4f (law %.4f)", got, want);
  }
  const CostSchedule s = cost_schedule(0.05, 1);
  const SweepRow row =
      cost_end_to_end(ou_problem(1.0, 1.0), Observable::moment(2), Vector{1.0}, s, 100000, MasterSeed{7}, 0.5);
  ok = ok && *row.abs_error <= 0.05 + 3.0 * row.estimate.std_error;
  detail += fmt("; eps 0.05: dt %.5f n %llu |err| %.4f", s.dt, static_cast<unsigned long long>(s.n_steps),
                *row.abs_error);
  return {ok, detail};
}

Verdict determinism_and_scaling() {
  const Problem cubic = cubic_problem();
  const Observable obs = Observable::moment(2);
  const auto run = [&](std::uint64_t m, unsigned workers) {
    EngineOptions e;
    e.workers = workers;
    return estimate_observable(cubic, params(0.01, 500), StepKind::tamed, Vector{0.0}, obs, m, MasterSeed{8}, e);
  };
  const Estimate one = run(20000, 1);
  const Estimate four = run(20000, 4);
  const bool same = one.mean == four.mean && one.variance == four.variance;
  const Estimate big = run(80000, 4);
  const double ratio = big.std_error / one.std_error;
  return {same && ratio > 0.45 && ratio < 0.55,
          fmt("workers 1 vs 4 %s (mean %.17g); stderr ratio at 4M %.4f", same ? "identical" : "DIFFER", one.mean, ratio)};
}

Verdict contraction() {
  const ContractionResult ou = contraction_test(ou_problem(1.0, 1.0), Vector{1.0}, Vector{-1.0}, 1e-3, 10.0, MasterSeed{9});
  const ContractionResult cubic = contraction_test(cubic_problem(), Vector{2.0}, Vector{-2.0}, 1e-3, 10.0, MasterSeed{9});
  return {ou.max_ratio <= 1.05 && cubic.max_ratio <= 1.05,
          fmt("max ratio OU %.6f, cubic %.6f", ou.max_ratio, cubic.max_ratio)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"1 OU invariant second moment", ou_second_moment},
      {"2 cubic invariant second moment", cubic_second_moment},
      {"3 weak-error order", weak_order},
      {"4 ergodic decomposition", ergodic_decomposition},
      {"5 stability dichotomy", stability},
      {"6 moment flatness", moment_flatness},
      {"7 cost schedule", cost_schedule_law},
      {"8 determinism and scaling", determinism_and_scaling},
      {"9 contraction", contraction},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s  %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
