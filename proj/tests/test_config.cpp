#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "tamed_ergo/config.hpp"

using namespace tamed;

namespace {

bool has_issue(const ConfigParse& p, ConfigIssue::Kind kind, const std::string& key) {
  return std::any_of(p.issues.begin(), p.issues.end(),
                     [&](const ConfigIssue& i) { return i.kind == kind && i.key == key; });
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("minimal estimate config takes documented defaults") {
  const ConfigParse p = parse_config("experiment = estimate\nproblem = ou\n");
  REQUIRE(p.issues.empty());
  REQUIRE(p.config);
  const RunConfig& c = *p.config;
  CHECK(c.experiment == Experiment::estimate);
  CHECK(c.alpha == 1.0);
  CHECK(c.dt_cap == 1.0);
  CHECK(c.workers == default_workers());
  CHECK(c.sigma == 1.0);
  CHECK(c.x0 == Vector{0.0});
  CHECK(c.scheme == StepKind::tamed);
}

TEST_CASE("problem dependent defaults") {
  const ConfigParse cubic = parse_config("experiment = estimate\nproblem = cubic\n");
  REQUIRE(cubic.config);
  CHECK(cubic.config->sigma == doctest::Approx(std::sqrt(2.0)));
  CHECK(cubic.config->growth_degree == 3);
  const ConfigParse rot = parse_config("experiment = estimate\nproblem = rotation\n");
  REQUIRE(rot.config);
  CHECK(rot.config->x0 == Vector{0.0, 0.0});
}

TEST_CASE("step size above its cap names dt") {
  const ConfigParse p = parse_config("experiment = estimate\nproblem = ou\ndt = 2.0\ndt_cap = 1.0\n");
  CHECK_FALSE(p.config);
  CHECK(has_issue(p, ConfigIssue::Kind::range_violation, "dt"));
}

TEST_CASE("negative gamma names gamma") {
  const ConfigParse p = parse_config("experiment = estimate\nproblem = ou\ngamma = -1\n");
  CHECK_FALSE(p.config);
  CHECK(has_issue(p, ConfigIssue::Kind::range_violation, "gamma"));
}

TEST_CASE("every problem is reported, not just the first") {
  const ConfigParse p = parse_config(
      "# broken\n"
      "problem = ou\n"
      "colour = blue\n"
      "dt = 2\n"
      "paths = -4\n"
      "this line has no equals sign\n");
  CHECK_FALSE(p.config);
  CHECK(has_issue(p, ConfigIssue::Kind::missing_required, "experiment"));
  CHECK(has_issue(p, ConfigIssue::Kind::unknown_key, "colour"));
  CHECK(has_issue(p, ConfigIssue::Kind::range_violation, "dt"));
  CHECK(has_issue(p, ConfigIssue::Kind::range_violation, "paths"));
  CHECK(has_issue(p, ConfigIssue::Kind::syntax, "line 6"));
  CHECK(p.issues.size() >= 5);

  const std::string message = ConfigError(p.issues).what();
  CHECK(message.rfind("cli:", 0) == 0);
  CHECK(message.find("UnknownKey 'colour'") != std::string::npos);
  CHECK(message.find("MissingRequired 'experiment'") != std::string::npos);
}

TEST_CASE("experiment specific requirements") {
  const ConfigParse weak = parse_config("experiment = weak-error\nproblem = ou\n");
  CHECK(has_issue(weak, ConfigIssue::Kind::missing_required, "dt_sweep"));
  CHECK(has_issue(weak, ConfigIssue::Kind::missing_required, "horizon"));
  const ConfigParse cost = parse_config("experiment = cost\nproblem = ou\n");
  CHECK(has_issue(cost, ConfigIssue::Kind::missing_required, "epsilon"));
  const ConfigParse poly = parse_config("experiment = check\nproblem = polynomial\n");
  CHECK(has_issue(poly, ConfigIssue::Kind::missing_required, "coefficient"));
  const ConfigParse fixed = parse_config("experiment = check\nproblem = cubic\ngamma = 2\n");
  CHECK(has_issue(fixed, ConfigIssue::Kind::range_violation, "gamma"));
}

TEST_CASE("lists come from repeated keys or commas") {
  const ConfigParse a = parse_config(
      "experiment = moment-growth\nproblem = ou\nhorizons = 1\nhorizons = 5\nhorizons = 10\n");
  const ConfigParse b = parse_config("experiment = moment-growth\nproblem = ou\nhorizons = 1, 5,10\n");
  REQUIRE(a.config);
  REQUIRE(b.config);
  CHECK(a.config->horizons == std::vector<double>{1.0, 5.0, 10.0});
  CHECK(*a.config == *b.config);
}

TEST_CASE("render parses back to the same config") {
  const char* texts[] = {
      "experiment = estimate\nproblem = ou\n",
      "experiment = weak-error\nproblem = cubic\nhorizon = 4\ndt_sweep = 0.2,0.1,0.05\nseed = 18446744073709551615\n",
      "experiment = check\nproblem = polynomial\ncoefficient = 0.1,-1,0.3333333333333333,-1\ngamma = 0.5\n"
      "growth_degree = 3\nsigma = 0.7\nobservable = polynomial:1,0,2\n",
      "experiment = contraction\nproblem = rotation\nrotation = 0.25\nx0 = 1,2\nx0_b = -1e-300,3\n"
      "checkpoint = 0,5\nzero_noise = true\nscheme = euler\n",
      "experiment = cost\nproblem = ou\nepsilon = 0.1,0.01\nR = 2\nc_time = 1.5\nverify = true\n",
  };
  for (const char* text : texts) {
    const ConfigParse p = parse_config(text);
    REQUIRE_MESSAGE(p.config, text);
    const ConfigParse again = parse_config(render(*p.config));
    REQUIRE(again.issues.empty());
    REQUIRE(again.config);
    CHECK(*again.config == *p.config);
    CHECK(config_hash(*again.config) == config_hash(*p.config));
  }
}

TEST_CASE("config hash is sensitive to every field") {
  const RunConfig a = *parse_config("experiment = estimate\nproblem = ou\n").config;
  RunConfig b = a;
  b.alpha = 1.0000000000000002;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("numbers print in shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_number(1e-300) == "1e-300");
  CHECK(std::stod(format_number(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("experiment names") {
  for (const char* name : {"simulate", "estimate", "oracle", "moment-growth", "weak-error",
                           "ergodic-error", "cost", "contraction", "diverge", "check"}) {
    const auto e = parse_experiment(name);
    REQUIRE(e);
    CHECK(to_string(*e) == name);
  }
  CHECK_FALSE(parse_experiment("explode"));
}

TEST_CASE("problems built from configs") {
  const RunConfig c =
      *parse_config("experiment = check\nproblem = polynomial\ncoefficient = 0,-2\ngamma = 2\ngrowth_degree = 1\n")
           .config;
  const Problem p = make_problem(c);
  CHECK(p.gamma() == 2.0);
  CHECK(eval_drift(p, Vector{3.0})[0] == -6.0);
  const RunConfig q = *parse_config("experiment = check\nproblem = cubic\ngrowth_degree = 1\n").config;
  CHECK(make_problem(q).growth_degree() == 1);
}

}
