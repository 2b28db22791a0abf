#include "tamed_ergo/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace tamed {

namespace {

constexpr std::array<std::pair<Experiment, std::string_view>, 10> kExperimentNames{{
    {Experiment::simulate, "simulate"},
    {Experiment::estimate, "estimate"},
    {Experiment::oracle, "oracle"},
    {Experiment::moment_growth, "moment-growth"},
    {Experiment::weak_error, "weak-error"},
    {Experiment::ergodic_error, "ergodic-error"},
    {Experiment::cost, "cost"},
    {Experiment::contraction, "contraction"},
    {Experiment::diverge, "diverge"},
    {Experiment::check, "check"},
}};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool read_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

template <typename Int>
bool read_integer(std::string_view s, Int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void issue(std::vector<ConfigIssue>& issues, ConfigIssue::Kind kind, std::string key,
           std::string message) {
  issues.push_back(ConfigIssue{kind, std::move(key), std::move(message)});
}

void range(std::vector<ConfigIssue>& issues, const std::string& key, const std::string& message) {
  issue(issues, ConfigIssue::Kind::range_violation, key, message);
}

// Field binding: how a key is read into and written out of RunConfig.
struct Binding {
  std::string key;
  bool list;
  std::function<void(RunConfig&, const std::vector<std::string>&, std::vector<ConfigIssue>&)> read;
  std::function<std::vector<std::string>(const RunConfig&)> write;
};

template <typename T>
Binding scalar_number(std::string key, T RunConfig::*field) {
  Binding b;
  b.key = key;
  b.list = false;
  b.read = [key, field](RunConfig& c, const std::vector<std::string>& v,
                        std::vector<ConfigIssue>& issues) {
    bool ok = false;
    if constexpr (std::is_floating_point_v<T>) {
      ok = read_double(v.front(), c.*field);
    } else {
      ok = read_integer(v.front(), c.*field);
    }
    if (!ok) range(issues, key, "cannot parse '" + v.front() + "' as a number");
  };
  b.write = [field](const RunConfig& c) {
    if constexpr (std::is_floating_point_v<T>) {
      return std::vector<std::string>{format_number(c.*field)};
    } else {
      return std::vector<std::string>{std::to_string(c.*field)};
    }
  };
  return b;
}

template <typename T>
Binding list_number(std::string key, std::vector<T> RunConfig::*field) {
  Binding b;
  b.key = key;
  b.list = true;
  b.read = [key, field](RunConfig& c, const std::vector<std::string>& v,
                        std::vector<ConfigIssue>& issues) {
    (c.*field).clear();
    std::vector<std::string> items;
    for (const auto& s : v) {
      std::size_t start = 0;
      while (true) {
        const auto comma = s.find(',', start);
        items.emplace_back(trim(std::string_view(s).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
    for (const auto& s : items) {
      T x{};
      bool ok = false;
      if constexpr (std::is_floating_point_v<T>) {
        ok = read_double(s, x);
      } else {
        ok = read_integer(s, x);
      }
      if (!ok) {
        range(issues, key, "cannot parse '" + s + "' as a number");
      } else {
        (c.*field).push_back(x);
      }
    }
  };
  b.write = [field](const RunConfig& c) {
    std::vector<std::string> out;
    for (const auto& x : c.*field) {
      if constexpr (std::is_floating_point_v<T>) {
        out.push_back(format_number(x));
      } else {
        out.push_back(std::to_string(x));
      }
    }
    return out;
  };
  return b;
}

Binding scalar_string(std::string key, std::string RunConfig::*field) {
  return Binding{key, false,
                 [field](RunConfig& c, const std::vector<std::string>& v, std::vector<ConfigIssue>&) {
                   c.*field = v.front();
                 },
                 [field](const RunConfig& c) { return std::vector<std::string>{c.*field}; }};
}

Binding scalar_bool(std::string key, bool RunConfig::*field) {
  return Binding{key, false,
                 [key, field](RunConfig& c, const std::vector<std::string>& v,
                              std::vector<ConfigIssue>& issues) {
                   if (v.front() == "true") {
                     c.*field = true;
                   } else if (v.front() == "false") {
                     c.*field = false;
                   } else {
                     range(issues, key, "expects true or false");
                   }
                 },
                 [field](const RunConfig& c) {
                   return std::vector<std::string>{c.*field ? "true" : "false"};
                 }};
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> t;
    t.push_back(Binding{
        "experiment", false,
        [](RunConfig& c, const std::vector<std::string>& v, std::vector<ConfigIssue>& issues) {
          if (auto e = parse_experiment(v.front())) {
            c.experiment = *e;
          } else {
            range(issues, "experiment", "unknown experiment '" + v.front() + "'");
          }
        },
        [](const RunConfig& c) { return std::vector<std::string>{std::string(to_string(c.experiment))}; }});
    t.push_back(scalar_string("problem", &RunConfig::problem));
    t.push_back(scalar_number("gamma", &RunConfig::gamma));
    t.push_back(scalar_number("sigma", &RunConfig::sigma));
    t.push_back(scalar_number("rotation", &RunConfig::rotation));
    t.push_back(list_number("coefficient", &RunConfig::coefficients));
    t.push_back(scalar_number("growth_degree", &RunConfig::growth_degree));
    t.push_back(Binding{
        "scheme", false,
        [](RunConfig& c, const std::vector<std::string>& v, std::vector<ConfigIssue>& issues) {
          if (v.front() == "tamed") {
            c.scheme = StepKind::tamed;
          } else if (v.front() == "euler") {
            c.scheme = StepKind::euler;
          } else {
            range(issues, "scheme", "expects tamed or euler");
          }
        },
        [](const RunConfig& c) { return std::vector<std::string>{std::string(to_string(c.scheme))}; }});
    t.push_back(scalar_number("dt", &RunConfig::dt));
    t.push_back(scalar_number("dt_cap", &RunConfig::dt_cap));
    t.push_back(scalar_number("alpha", &RunConfig::alpha));
    t.push_back(scalar_number("steps", &RunConfig::steps));
    t.push_back(list_number("x0", &RunConfig::x0));
    t.push_back(list_number("x0_b", &RunConfig::x0_b));
    t.push_back(scalar_bool("zero_noise", &RunConfig::zero_noise));
    t.push_back(list_number("checkpoint", &RunConfig::checkpoints));
    t.push_back(scalar_number("noise_refinement", &RunConfig::noise_refinement));
    t.push_back(scalar_string("observable", &RunConfig::observable));
    t.push_back(scalar_number("paths", &RunConfig::paths));
    t.push_back(scalar_number("seed", &RunConfig::seed));
    t.push_back(scalar_number("workers", &RunConfig::workers));
    t.push_back(scalar_string("out", &RunConfig::out));
    t.push_back(scalar_number("order", &RunConfig::order));
    t.push_back(list_number("horizons", &RunConfig::horizons));
    t.push_back(scalar_number("horizon", &RunConfig::horizon));
    t.push_back(list_number("dt_sweep", &RunConfig::dt_sweep));
    t.push_back(scalar_string("reference", &RunConfig::reference));
    t.push_back(scalar_number("plateau_start", &RunConfig::plateau_start));
    t.push_back(list_number("epsilon", &RunConfig::epsilon));
    t.push_back(scalar_number("R", &RunConfig::R));
    t.push_back(scalar_number("c_time", &RunConfig::c_time));
    t.push_back(scalar_number("c_acc", &RunConfig::c_acc));
    t.push_back(scalar_bool("verify", &RunConfig::verify));
    t.push_back(scalar_string("oracle", &RunConfig::oracle));
    t.push_back(scalar_number("grid_lower", &RunConfig::grid_lower));
    t.push_back(scalar_number("grid_upper", &RunConfig::grid_upper));
    t.push_back(scalar_number("grid_nodes", &RunConfig::grid_nodes));
    t.push_back(scalar_string("grid_rule", &RunConfig::grid_rule));
    t.push_back(scalar_number("dt_ref", &RunConfig::dt_ref));
    t.push_back(scalar_number("dt_fine", &RunConfig::dt_fine));
    t.push_back(scalar_number("samples", &RunConfig::samples));
    t.push_back(scalar_number("radius", &RunConfig::radius));
    return t;
  }();
  return table;
}

std::size_t problem_dim(const std::string& name) { return name == "rotation" ? 2 : 1; }

bool one_of(const std::string& v, std::initializer_list<std::string_view> options) {
  return std::find(options.begin(), options.end(), v) != options.end();
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string_view to_string(Experiment e) noexcept {
  for (const auto& [k, name] : kExperimentNames) {
    if (k == e) return name;
  }
  return "unknown";
}

std::optional<Experiment> parse_experiment(std::string_view text) noexcept {
  for (const auto& [k, name] : kExperimentNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(ConfigIssue::Kind kind) noexcept {
  switch (kind) {
    case ConfigIssue::Kind::unknown_key: return "UnknownKey";
    case ConfigIssue::Kind::missing_required: return "MissingRequired";
    case ConfigIssue::Kind::range_violation: return "RangeViolation";
    case ConfigIssue::Kind::syntax: return "SyntaxError";
  }
  return "Unknown";
}

KeyValues parse_key_values(std::string_view text, std::vector<ConfigIssue>& issues) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      issue(issues, ConfigIssue::Kind::syntax, "line " + std::to_string(line_no),
            "expected 'key = value'");
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      issue(issues, ConfigIssue::Kind::syntax, "line " + std::to_string(line_no), "empty key");
      continue;
    }
    kv[key].push_back(value);
  }
  return kv;
}

ConfigParse build_config(const KeyValues& values) {
  ConfigParse result;
  auto& issues = result.issues;
  RunConfig c;

  for (const auto& [key, vals] : values) {
    const auto& table = bindings();
    auto it = std::find_if(table.begin(), table.end(), [&](const Binding& b) { return b.key == key; });
    if (it == table.end()) {
      issue(issues, ConfigIssue::Kind::unknown_key, key, "unknown key");
      continue;
    }
    if (!it->list && vals.size() != 1) {
      range(issues, key, "expects a single value");
      continue;
    }
    it->read(c, vals, issues);
  }
  const auto has = [&](const char* key) { return values.contains(key); };

  if (!has("experiment")) {
    issue(issues, ConfigIssue::Kind::missing_required, "experiment", "experiment is required");
  }
  if (!has("problem")) {
    issue(issues, ConfigIssue::Kind::missing_required, "problem", "problem is required");
  }

  // Problem-dependent resolution.
  const bool known_problem = one_of(c.problem, {"ou", "cubic", "rotation", "polynomial"});
  if (!known_problem) {
    range(issues, "problem", "unknown problem '" + c.problem + "'");
  }
  if (!has("sigma")) {
    c.sigma = c.problem == "cubic" ? std::sqrt(2.0) : 1.0;
  }
  if (c.problem == "cubic" || c.problem == "rotation") {
    if (has("gamma") && c.gamma != 1.0) {
      range(issues, "gamma", "gamma is fixed at 1 for problem '" + c.problem + "'");
    }
    c.gamma = 1.0;
  }
  if (c.problem == "polynomial") {
    if (!has("coefficient")) {
      issue(issues, ConfigIssue::Kind::missing_required, "coefficient",
            "polynomial drift needs coefficient entries");
    }
    if (!has("gamma")) {
      issue(issues, ConfigIssue::Kind::missing_required, "gamma",
            "polynomial drift needs a declared gamma");
    }
  } else if (has("coefficient")) {
    range(issues, "coefficient", "only the polynomial problem takes coefficients");
  }
  if (!has("growth_degree")) {
    if (c.problem == "cubic") {
      c.growth_degree = 3;
    } else if (c.problem == "polynomial" && !c.coefficients.empty()) {
      c.growth_degree = static_cast<unsigned>(c.coefficients.size() - 1);
    } else {
      c.growth_degree = 1;
    }
  }
  const std::size_t dim = problem_dim(c.problem);
  if (!has("x0")) c.x0.assign(dim, 0.0);
  if (!has("workers")) c.workers = default_workers();

  // Ranges.
  if (!(c.gamma > 0.0)) range(issues, "gamma", "gamma must be positive");
  if (!(c.sigma > 0.0)) range(issues, "sigma", "sigma must be positive");
  if (!(c.dt_cap > 0.0)) range(issues, "dt_cap", "dt_cap must be positive");
  if (!(c.dt > 0.0)) {
    range(issues, "dt", "dt must be positive");
  } else if (c.dt > c.dt_cap) {
    range(issues, "dt", "dt must not exceed dt_cap = " + format_number(c.dt_cap));
  }
  if (!(c.alpha > 0.0)) range(issues, "alpha", "alpha must be positive");
  if (c.x0.size() != dim) {
    range(issues, "x0", "x0 needs " + std::to_string(dim) + " component(s)");
  }
  if (!c.x0_b.empty() && c.x0_b.size() != dim) {
    range(issues, "x0_b", "x0_b needs " + std::to_string(dim) + " component(s)");
  }
  if (!std::is_sorted(c.checkpoints.begin(), c.checkpoints.end()) ||
      (!c.checkpoints.empty() && c.checkpoints.back() > c.steps)) {
    range(issues, "checkpoint", "checkpoints must be sorted and at most steps");
  }
  if (c.noise_refinement == 0) range(issues, "noise_refinement", "must be at least 1");
  try {
    parse_observable(c.observable);
  } catch (const Error& e) {
    range(issues, "observable", e.what());
  }
  if (c.paths < 2) range(issues, "paths", "at least two paths are required");
  if (c.workers == 0) range(issues, "workers", "at least one worker is required");
  if (c.out.empty()) range(issues, "out", "output directory must be non-empty");
  if (c.order == 0) range(issues, "order", "order must be positive");
  for (double h : c.horizons) {
    if (!(h >= 0.0)) range(issues, "horizons", "horizons must be nonnegative");
  }
  if (c.horizon < 0.0) range(issues, "horizon", "horizon must be nonnegative");
  for (double d : c.dt_sweep) {
    if (!(d > 0.0) || d > c.dt_cap) {
      range(issues, "dt_sweep", "each swept dt must lie in (0, dt_cap]");
    }
  }
  if (!one_of(c.reference, {"auto", "closed_form", "fine_step"})) {
    range(issues, "reference", "expects auto, closed_form or fine_step");
  }
  for (double e : c.epsilon) {
    if (!(e > 0.0 && e < 1.0)) range(issues, "epsilon", "epsilon must lie in (0, 1)");
  }
  if (!(c.c_time > 0.0)) range(issues, "c_time", "must be positive");
  if (!(c.c_acc > 0.0)) range(issues, "c_acc", "must be positive");
  if (!one_of(c.oracle, {"auto", "closed_form", "quadrature", "fine_step"})) {
    range(issues, "oracle", "expects auto, closed_form, quadrature or fine_step");
  }
  if (!(c.grid_lower < c.grid_upper)) range(issues, "grid_lower", "grid_lower must be below grid_upper");
  if (!one_of(c.grid_rule, {"simpson", "trapezoid"})) {
    range(issues, "grid_rule", "expects simpson or trapezoid");
  }
  if (c.grid_nodes < 9 || (c.grid_rule == "simpson" && c.grid_nodes % 2 == 0)) {
    range(issues, "grid_nodes", "needs at least 9 nodes (odd for simpson)");
  }
  if (!(c.dt_ref > 0.0)) range(issues, "dt_ref", "dt_ref must be positive");
  if (!(c.dt_fine > 0.0) || c.dt_fine > 1e-3) range(issues, "dt_fine", "dt_fine must lie in (0, 1e-3]");
  if (c.samples == 0) range(issues, "samples", "at least one sample is required");
  if (!(c.radius > 0.0)) range(issues, "radius", "radius must be positive");

  // Experiment-specific requirements.
  auto require = [&](const char* key, const char* why) {
    if (!has(key)) issue(issues, ConfigIssue::Kind::missing_required, key, why);
  };
  switch (c.experiment) {
    case Experiment::weak_error:
      require("dt_sweep", "weak-error needs dt_sweep entries");
      require("horizon", "weak-error needs a horizon");
      break;
    case Experiment::moment_growth:
    case Experiment::ergodic_error:
      require("horizons", "this experiment needs horizons entries");
      break;
    case Experiment::cost:
      require("epsilon", "cost needs epsilon entries");
      break;
    case Experiment::contraction:
      require("x0_b", "contraction needs a second initial condition x0_b");
      break;
    default:
      break;
  }

  if (issues.empty()) result.config = c;
  return result;
}

ConfigParse parse_config(std::string_view text) {
  std::vector<ConfigIssue> syntax;
  const KeyValues kv = parse_key_values(text, syntax);
  ConfigParse result = build_config(kv);
  if (!syntax.empty()) {
    result.issues.insert(result.issues.begin(), syntax.begin(), syntax.end());
    result.config.reset();
  }
  return result;
}

std::string render(const RunConfig& config) {
  std::string out;
  for (const auto& b : bindings()) {
    for (const auto& v : b.write(config)) {
      out += b.key + " = " + v + "\n";
    }
  }
  return out;
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : render(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Problem make_problem(const RunConfig& config) {
  if (config.problem == "ou") return ou_problem(config.gamma, config.sigma).with_growth_degree(config.growth_degree);
  if (config.problem == "cubic") return cubic_problem(config.sigma).with_growth_degree(config.growth_degree);
  if (config.problem == "rotation") {
    return rotation_problem(config.rotation, config.sigma).with_growth_degree(config.growth_degree);
  }
  if (config.problem == "polynomial") {
    return polynomial_problem(config.coefficients, config.gamma, config.growth_degree, config.sigma);
  }
  throw InvalidArgument("cli", "unknown problem '" + config.problem + "'");
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error("cli", [&] {
        std::string msg = "invalid configuration:";
        for (const auto& i : issues) {
          msg += "\n  " + std::string(to_string(i.kind)) + " '" + i.key + "': " + i.message;
        }
        return msg;
      }()),
      issues_(std::move(issues)) {}

}  // namespace tamed
