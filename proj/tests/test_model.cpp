#include <doctest.h>

#include <cmath>

#include "tamed_ergo/error.hpp"
#include "tamed_ergo/model.hpp"

using namespace tamed;

TEST_SUITE("model") {

TEST_CASE("drift evaluation on catalog problems") {
  const Problem cubic = cubic_problem();
  CHECK(eval_drift(cubic, Vector{0.0})[0] == 0.0);
  CHECK(eval_drift(cubic, Vector{2.0})[0] == -10.0);
  CHECK(eval_drift(ou_problem(), Vector{-3.0})[0] == 3.0);

  const Problem rot = rotation_problem(0.5);
  const Vector f = eval_drift(rot, Vector{1.0, 2.0});
  CHECK(f[0] == doctest::Approx(-1.0 - 1.0));
  CHECK(f[1] == doctest::Approx(-2.0 + 0.5));
}

TEST_CASE("drift evaluation is pure") {
  const Problem cubic = cubic_problem();
  const Vector x{1.2345};
  CHECK(eval_drift(cubic, x) == eval_drift(cubic, x));
}

TEST_CASE("polynomial drift uses coefficients in ascending degree") {
  const Problem p = polynomial_problem({1.0, -2.0, 0.0, -1.0}, 1.0, 3);
  CHECK(eval_drift(p, Vector{2.0})[0] == doctest::Approx(1.0 - 4.0 - 8.0));
  // V = -(x - x^2 - x^4/4)
  CHECK(p.potential(Vector{2.0}) == doctest::Approx(-(2.0 - 4.0 - 4.0)));
}

TEST_CASE("non-finite drift raises overflow with the offending point") {
  const Problem p = polynomial_problem({0.0, 0.0, 0.0, -1.0}, 1.0, 3);
  try {
    eval_drift(p, Vector{1e200});
    FAIL("expected DriftOverflow");
  } catch (const DriftOverflow& e) {
    CHECK(e.point() == Vector{1e200});
    CHECK(std::string(e.what()).rfind("model:", 0) == 0);
  }
}

TEST_CASE("invalid problem construction") {
  CHECK_THROWS_AS(NoiseModel(1, {Vector{0.0}}), InvalidArgument);
  CHECK_THROWS_AS(NoiseModel(2, {Vector{1.0}}), InvalidArgument);
  CHECK_THROWS_AS(ou_problem(-1.0), InvalidArgument);
  CHECK_THROWS_AS(polynomial_problem({}, 1.0, 1), InvalidArgument);
}

TEST_CASE("one-sided check on the cubic drift passes for many seeds and radii") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (double radius : {0.1, 1.0, 10.0}) {
      const AssumptionReport r = check_one_sided(cubic_problem(), 200, radius, seed);
      REQUIRE(r.passed);
      REQUIRE(r.worst_ratio <= -1.0);
    }
  }
}

TEST_CASE("one-sided check falsifies the double well") {
  const Problem well = polynomial_problem({0.0, 1.0, 0.0, -1.0}, 1.0, 3);
  const AssumptionReport r = check_one_sided(well, 1000, 0.5, 7);
  CHECK_FALSE(r.passed);
  CHECK(r.worst_ratio > 0.5);
  CHECK(r.worst_ratio <= 1.0);
  CHECK_FALSE(r.notes.empty());
}

TEST_CASE("one-sided ratio of a linear drift is exactly -gamma") {
  const AssumptionReport r = check_one_sided(ou_problem(), 1000, 10.0, 3);
  CHECK(r.worst_ratio == -1.0);
  CHECK(r.passed);
}

TEST_CASE("rotation keeps the one-sided constant") {
  const AssumptionReport r = check_one_sided(rotation_problem(0.5), 2000, 10.0, 11);
  CHECK(r.passed);
  CHECK(r.worst_ratio == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("stored witness reproduces the worst ratio") {
  const Problem well = polynomial_problem({0.0, 1.0, 0.0, -1.0}, 1.0, 3);
  for (const Problem& p : {cubic_problem(), well}) {
    const AssumptionReport r = check_one_sided(p, 500, 2.0, 5);
    CHECK(one_sided_ratio(p, r.witness, r.witness_second) == r.worst_ratio);
  }
}

TEST_CASE("growth checks") {
  const AssumptionReport cubic = check_poly_growth(cubic_problem(), 5000, 10.0, 1);
  CHECK(cubic.passed);
  CHECK(cubic.worst_ratio <= 2.0);

  const AssumptionReport ou = check_poly_growth(ou_problem(), 5000, 100.0, 1);
  CHECK(ou.worst_ratio <= 1.0);

  const Problem cubic_q1 = cubic_problem().with_growth_degree(1);
  const AssumptionReport small = check_poly_growth(cubic_q1, 5000, 10.0, 1);
  const AssumptionReport large = check_poly_growth(cubic_q1, 5000, 100.0, 1);
  CHECK(large.worst_ratio > 10.0 * small.worst_ratio);
  CHECK(std::isfinite(large.worst_ratio));
  CHECK(large.notes.find("q = 1") != std::string::npos);
  CHECK(small.notes.empty());
}

TEST_CASE("dense scan confirms the cubic growth bound") {
  const Problem cubic = cubic_problem();
  double worst = 0.0;
  for (int i = -100000; i <= 100000; ++i) {
    worst = std::max(worst, growth_ratio(cubic, Vector{i * 1e-4}));
  }
  CHECK(worst <= 2.0);
}

TEST_CASE("sampling arguments are validated") {
  CHECK_THROWS_AS(check_one_sided(ou_problem(), 0, 1.0, 0), InvalidArgument);
  CHECK_THROWS_AS(check_poly_growth(ou_problem(), 10, -1.0, 0), InvalidArgument);
}

TEST_CASE("gibbs log-density") {
  CHECK(gibbs_log_density(ou_problem(), Vector{1.0}, 1.0) == -1.0);
  CHECK(gibbs_log_density(cubic_problem(), Vector{1.0}, std::sqrt(2.0)) ==
        doctest::Approx(-0.75));

  const Problem cubic = cubic_problem();
  const double s = std::sqrt(2.0);
  const double x = 0.7, y = -1.9;
  CHECK(gibbs_log_density(cubic, Vector{x}, s) - gibbs_log_density(cubic, Vector{y}, s) ==
        doctest::Approx(-2.0 * (cubic.potential(Vector{x}) - cubic.potential(Vector{y})) / (s * s)));

  const double at_min = gibbs_log_density(cubic, Vector{0.0}, s);
  for (double z = -3.0; z <= 3.0; z += 0.01) {
    REQUIRE(gibbs_log_density(cubic, Vector{z}, s) <= at_min);
  }
}

TEST_CASE("gibbs log-density needs a gradient problem with matching noise") {
  CHECK_THROWS_AS(gibbs_log_density(rotation_problem(), Vector{1.0, 0.0}, 1.0), NotGradientProblem);
  CHECK_THROWS_AS(gibbs_log_density(ou_problem(), Vector{1.0}, 2.0), NotGradientProblem);
}

}
