#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tamed_ergo/error.hpp"
#include "tamed_ergo/model.hpp"
#include "tamed_ergo/montecarlo.hpp"
#include "tamed_ergo/scheme.hpp"

namespace tamed {

enum class Experiment {
  simulate,
  estimate,
  oracle,
  moment_growth,
  weak_error,
  ergodic_error,
  cost,
  contraction,
  diverge,
  check,
};

/// CLI spelling: "moment-growth", "weak-error", ...
std::string_view to_string(Experiment e) noexcept;
std::optional<Experiment> parse_experiment(std::string_view text) noexcept;

/// Everything a run needs. Every field is resolved at parse time (problem
/// dependent defaults included) and rendered back into output headers.
struct RunConfig {
  Experiment experiment = Experiment::estimate;

  // problem
  std::string problem = "ou";  ///< ou | cubic | rotation | polynomial
  double gamma = 1.0;
  double sigma = 1.0;
  double rotation = 0.5;  ///< skew coefficient of the rotation problem
  std::vector<double> coefficients;
  unsigned growth_degree = 1;

  // scheme
  StepKind scheme = StepKind::tamed;
  double dt = 0.01;
  double dt_cap = 1.0;
  double alpha = 1.0;
  std::uint64_t steps = 1000;
  std::vector<double> x0;
  std::vector<double> x0_b;
  bool zero_noise = false;
  std::vector<std::uint64_t> checkpoints;
  std::uint64_t noise_refinement = 1;

  // Monte Carlo
  std::string observable = "moment:2";
  std::uint64_t paths = 10000;
  std::uint64_t seed = 42;
  unsigned workers = 1;
  std::string out = "results";

  // sweeps
  unsigned order = 2;
  std::vector<double> horizons;
  double horizon = 0.0;
  std::vector<double> dt_sweep;
  std::string reference = "auto";  ///< auto | closed_form | fine_step
  double plateau_start = 0.0;

  // cost schedule
  std::vector<double> epsilon;
  unsigned R = 1;
  double c_time = 1.0;
  double c_acc = 1.0;
  bool verify = false;

  // oracle
  std::string oracle = "auto";  ///< auto | closed_form | quadrature | fine_step
  double grid_lower = -10.0;
  double grid_upper = 10.0;
  std::uint64_t grid_nodes = 4001;
  std::string grid_rule = "simpson";
  double dt_ref = 1.0 / 1024.0;

  // contraction / diagnostics
  double dt_fine = 1e-3;
  std::uint64_t samples = 10000;
  double radius = 10.0;

  bool operator==(const RunConfig&) const = default;
};

struct ConfigIssue {
  enum class Kind { unknown_key, missing_required, range_violation, syntax };
  Kind kind;
  std::string key;
  std::string message;
};

std::string_view to_string(ConfigIssue::Kind kind) noexcept;

/// Ordered key -> values; repeated keys accumulate.
using KeyValues = std::map<std::string, std::vector<std::string>>;

/// Splits `key = value` lines; `#` starts a comment. Malformed lines are
/// reported as syntax issues.
KeyValues parse_key_values(std::string_view text, std::vector<ConfigIssue>& issues);

struct ConfigParse {
  std::optional<RunConfig> config;
  std::vector<ConfigIssue> issues;  ///< every problem found, not just the first
};

/// Validates and resolves defaults.
ConfigParse build_config(const KeyValues& values);
ConfigParse parse_config(std::string_view text);

/// Flat key = value text that parses back to an equal config.
std::string render(const RunConfig& config);

/// FNV-1a 64 over render(config), as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Problem instance described by the config.
Problem make_problem(const RunConfig& config);

/// Thrown by the CLI layer when validation fails.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Round-trip decimal representation.
std::string format_number(double v);

}  // namespace tamed
