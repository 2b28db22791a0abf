#pragma once

#include <ostream>

#include "tamed_ergo/config.hpp"

namespace tamed {

/// Exit statuses of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Executes the configured experiment. Writes `<out>/<experiment>.csv` and
/// `<out>/<experiment>.json`, prints the JSON summary to `console`, and
/// reports module errors on `errors`. Returns kExitRuntime on
/// AllPathsExploded or oracle failures.
int run(const RunConfig& config, std::ostream& console, std::ostream& errors);

}  // namespace tamed
