#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qapool {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitSolver = 3;

/// Runs the command line `args` (without the program name). JSON results go to
/// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qapool
