#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tamed_ergo/config.hpp"
#include "tamed_ergo/runner.hpp"

namespace {

struct Flags {
  std::string config_file;
  std::vector<std::string> sets;
  // key -> value for flags given on the command line
  std::vector<std::pair<std::string, std::string>> overrides;
};

void flag(CLI::App* sub, Flags& flags, const std::string& name, const std::string& key,
          const std::string& help) {
  sub->add_option_function<std::string>(
      name, [&flags, key](const std::string& v) { flags.overrides.emplace_back(key, v); }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tamed Euler-Maruyama experiments for ergodic SDEs"};
  app.require_subcommand(1);

  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "Simulate one path"},
      {"estimate", "Monte Carlo estimate of an observable at the final time"},
      {"oracle", "Reference values for an observable"},
      {"moment-growth", "Sup-in-time moments over several horizons"},
      {"weak-error", "Weak error against dt with a fitted slope"},
      {"ergodic-error", "Error against the invariant average over horizons"},
      {"cost", "Step size and step count schedule per accuracy"},
      {"contraction", "Synchronous coupling distance of two starts"},
      {"diverge", "Euler blow-up against the tamed scheme"},
      {"check", "Sampling checks of the drift assumptions"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config_file, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--set", flags.sets, "Override a config key (key=value)");
    flag(sub, flags, "--seed", "seed", "Master seed");
    flag(sub, flags, "--workers", "workers", "Worker threads");
    flag(sub, flags, "--out", "out", "Output directory");
    flag(sub, flags, "--problem", "problem", "ou | cubic | rotation | polynomial");
    flag(sub, flags, "--scheme", "scheme", "tamed | euler");
    flag(sub, flags, "--dt", "dt", "Step size");
    flag(sub, flags, "--alpha", "alpha", "Taming strength");
    flag(sub, flags, "--steps", "steps", "Number of steps");
    flag(sub, flags, "--x0", "x0", "Initial state, comma separated");
    flag(sub, flags, "--checkpoints", "checkpoint", "Recorded steps, comma separated");
    flag(sub, flags, "--observable", "observable", "moment:m | coordinate:i:m | polynomial:c0,c1,...");
    flag(sub, flags, "--paths", "paths", "Monte Carlo paths");
    sub->add_flag_callback("--zero-noise",
                           [&flags] { flags.overrides.emplace_back("zero_noise", "true"); },
                           "Drop the noise term");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string experiment = app.get_subcommands().front()->get_name();

  std::vector<tamed::ConfigIssue> issues;
  tamed::KeyValues kv;
  if (!flags.config_file.empty()) {
    std::ifstream in(flags.config_file);
    std::stringstream text;
    text << in.rdbuf();
    kv = tamed::parse_key_values(text.str(), issues);
  }
  kv["experiment"] = {experiment};
  for (const auto& s : flags.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      issues.push_back({tamed::ConfigIssue::Kind::syntax, s, "--set expects key=value"});
      continue;
    }
    flags.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [key, value] : flags.overrides) kv[key] = {value};

  tamed::ConfigParse parsed = tamed::build_config(kv);
  issues.insert(issues.end(), parsed.issues.begin(), parsed.issues.end());
  if (!issues.empty() || !parsed.config) {
    std::cerr << tamed::ConfigError(issues).what() << "\n";
    return tamed::kExitConfig;
  }
  return tamed::run(*parsed.config, std::cout, std::cerr);
}
