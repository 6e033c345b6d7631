#pragma once

#include <ostream>

namespace mlbn::app {

/// Exit codes: 0 ok, 1 usage error, 2 data or estimation error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Subcommands generate, kleene, atoms, occupancy, estimate, experiment and
/// serve. JSON goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mlbn::app
