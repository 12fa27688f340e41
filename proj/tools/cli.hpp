#pragma once

#include <ostream>
#include <span>
#include <string>

namespace piou::cli {

/// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // module error or failed check
inline constexpr int kExitUsage = 2;    // bad flags or malformed box string
inline constexpr int kExitBudget = 3;   // pixel budget exceeded

/// Runs one command line. `args` excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace piou::cli
