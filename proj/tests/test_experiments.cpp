#include <doctest.h>

#include <cmath>
#include <vector>

#include "tamed_ergo/error.hpp"
#include "tamed_ergo/experiments.hpp"
#include "tamed_ergo/oracle.hpp"

using namespace tamed;

TEST_SUITE("experiments") {

TEST_CASE("moment growth on OU rises toward the stationary value") {
  const std::vector<double> horizons{1.0, 5.0, 10.0};
  const auto rows = moment_growth_sweep(ou_problem(), Vector{0.0}, 2, 0.01, horizons, 10000, MasterSeed{1});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].estimate.mean <= rows[1].estimate.mean);
  CHECK(rows[1].estimate.mean <= rows[2].estimate.mean);
  CHECK(rows[0].estimate.mean == doctest::Approx(0.5 * (1.0 - std::exp(-2.0))).epsilon(0.05));
  CHECK(std::abs(rows[2].estimate.mean - 0.5) < 0.05);
}

TEST_CASE("moment growth at time zero") {
  const std::vector<double> horizons{0.0};
  const auto rows = moment_growth_sweep(cubic_problem(), Vector{2.0}, 4, 0.01, horizons, 100, MasterSeed{1});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].estimate.mean == 16.0);
}

TEST_CASE("least-squares slope of a power law") {
  const std::vector<double> x{0.1, 0.2, 0.4, 0.8};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.5));
  CHECK(log_log_slope(x, y) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_THROWS_AS(log_log_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidArgument);
}

TEST_CASE("weak error needs several step sizes") {
  const std::vector<double> one{0.1};
  CHECK_THROWS_AS(weak_error_sweep(ou_problem(), Observable::moment(2), Vector{0.0}, 4.0, one, 100,
                                   MasterSeed{0}, 0.5),
                  SlopeUndetermined);
  const std::vector<double> rising{0.05, 0.1, 0.2};
  CHECK_THROWS_AS(weak_error_sweep(ou_problem(), Observable::moment(2), Vector{0.0}, 4.0, rising, 100,
                                   MasterSeed{0}, 0.5),
                  InvalidArgument);
}

TEST_CASE("euler baseline is first order on OU") {
  const std::vector<double> dts{0.2, 0.1, 0.05, 0.025};
  SweepOptions opt;
  opt.kind = StepKind::euler;
  const double exact = ou_expectation({1.0, 1.0}, Observable::moment(2), 0.0, 4.0);
  const WeakErrorResult r =
      weak_error_sweep(ou_problem(), Observable::moment(2), Vector{0.0}, 4.0, dts, 50000, MasterSeed{3}, exact, opt);
  CHECK(r.fitted_slope >= 0.7);
  CHECK(r.fitted_slope <= 1.3);
  CHECK(r.reference_provenance == "closed-form");
}

TEST_CASE("weak error against a simulated fine reference") {
  const std::vector<double> dts{0.2, 0.1, 0.05};
  const WeakErrorResult r =
      weak_error_sweep(cubic_problem(), Observable::moment(2), Vector{1.0}, 2.0, dts, 10000, MasterSeed{4},
                       std::nullopt);
  CHECK(r.dt_ref == doctest::Approx(0.05 / 16.0));
  CHECK(r.reference_provenance == "fine-step");
  CHECK(r.rows_used == 3);
  CHECK(r.fitted_slope >= 0.7);
  CHECK(r.fitted_slope <= 1.3);
  for (const auto& row : r.rows) CHECK(row.error_std_error < *row.abs_error);
}

TEST_CASE("ergodic error decays to a small plateau") {
  const std::vector<std::uint64_t> steps{0, 100, 200, 400, 800, 1600};
  const ErgodicResult r = ergodic_error_curve(ou_problem(), Observable::moment(2), Vector{3.0}, 0.01, steps,
                                              20000, MasterSeed{5}, 0.5, 8.0);
  REQUIRE(r.rows.size() == 6);
  CHECK(*r.rows[0].abs_error == 8.5);
  for (std::size_t i = 1; i < 4; ++i) CHECK(*r.rows[i].abs_error < *r.rows[i - 1].abs_error);
  CHECK(r.plateau_error <= 0.02 + 3.0 * r.plateau_std_error);
  REQUIRE(r.decay_rate.has_value());
  CHECK(*r.decay_rate < -1.4);
}

TEST_CASE("cost schedule arithmetic") {
  const CostSchedule s = cost_schedule(0.01, 1);
  CHECK(s.horizon == doctest::Approx(std::log(100.0)).epsilon(1e-15));
  CHECK(s.dt == doctest::Approx(0.01 / std::log(100.0)).epsilon(1e-15));
  CHECK(s.n_steps == 2121);
  CHECK(cost_schedule(0.1, 1).n_steps == 54);
  CHECK(cost_schedule(0.001, 1).n_steps == 47718);

  for (double eps : {0.3, 0.01, 1e-4}) {
    const CostSchedule r0 = cost_schedule(eps, 0, 1.5, 0.5);
    CHECK(r0.n_steps ==
          static_cast<std::uint64_t>(std::ceil(1.5 * std::abs(std::log(eps)) / (0.5 * eps))));
  }
  CHECK_THROWS_AS(cost_schedule(1.5, 1), InvalidArgument);
  CHECK_THROWS_AS(cost_schedule(0.1, 1, -1.0), InvalidArgument);
}

TEST_CASE("cost schedule homogeneity and monotonicity") {
  for (double eps : {0.2, 0.05, 0.003}) {
    const CostSchedule a = cost_schedule(eps, 2, 1.0, 1.0);
    const CostSchedule b = cost_schedule(eps, 2, 2.0, 1.0);
    CHECK(b.horizon == 2.0 * a.horizon);
    CHECK(b.dt == a.dt);
  }
  for (unsigned R : {0u, 1u, 2u}) {
    double prev_dt = INFINITY;
    std::uint64_t prev_n = 0;
    for (double eps : {0.3, 0.1, 0.03, 0.01, 0.001}) {
      const CostSchedule s = cost_schedule(eps, R);
      CHECK(s.dt < prev_dt);
      CHECK(s.n_steps > prev_n);
      prev_dt = s.dt;
      prev_n = s.n_steps;
    }
  }
}

TEST_CASE("cost schedule end to end on OU") {
  const CostSchedule s = cost_schedule(0.1, 1);
  const SweepRow row = cost_end_to_end(ou_problem(), Observable::moment(2), Vector{1.0}, s, 20000,
                                       MasterSeed{6}, 0.5);
  CHECK(*row.abs_error <= 0.1 + 3.0 * row.estimate.std_error);
}

TEST_CASE("contraction of coupled paths") {
  const ContractionResult ou = contraction_test(ou_problem(), Vector{1.0}, Vector{-1.0}, 1e-3, 5.0, MasterSeed{1});
  CHECK(ou.max_ratio <= 1.0 + 5e-3);
  CHECK(ou.steps == 5000);

  const ContractionResult cubic = contraction_test(cubic_problem(), Vector{2.0}, Vector{-2.0}, 1e-3, 10.0,
                                                   MasterSeed{1});
  CHECK(cubic.max_ratio <= 1.05);
  CHECK(cubic.final_distance < 1e-3);

  const ContractionResult same = contraction_test(cubic_problem(), Vector{0.5}, Vector{0.5}, 1e-3, 1.0, MasterSeed{1});
  CHECK(same.max_distance == 0.0);
  CHECK(same.max_ratio == 0.0);

  CHECK_THROWS_AS(contraction_test(ou_problem(), Vector{1.0}, Vector{0.0}, 1e-2, 1.0, MasterSeed{1}),
                  InvalidArgument);
}

TEST_CASE("rotation contracts at the radial rate") {
  const ContractionResult r = contraction_test(rotation_problem(0.5), Vector{1.0, 0.0}, Vector{0.0, 1.0},
                                               1e-3, 3.0, MasterSeed{2});
  CHECK(r.max_ratio <= 1.01);
}

TEST_CASE("divergence demo") {
  const DivergenceResult far = divergence_demo(cubic_problem(), Vector{100.0}, 0.5, 1000, MasterSeed{0}, true);
  REQUIRE(far.euler_exploded_at.has_value());
  CHECK(*far.euler_exploded_at <= 3);
  CHECK(far.tamed_sup_norm <= 100.0);
  CHECK(far.tamed_displacement_violations == 0);

  const DivergenceResult ou = divergence_demo(ou_problem(), Vector{1.0}, 0.1, 1000, MasterSeed{0});
  CHECK_FALSE(ou.euler_exploded_at.has_value());

  const DivergenceResult rest = divergence_demo(cubic_problem(), Vector{0.0}, 0.5, 100, MasterSeed{0}, true);
  CHECK_FALSE(rest.euler_exploded_at.has_value());
  CHECK(rest.euler_sup_norm == 0.0);
  CHECK(rest.tamed_sup_norm == 0.0);
}

}
