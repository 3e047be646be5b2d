// Command-line front end. The executable is a thin wrapper so that tests can
// drive every subcommand in-process.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace abcrm::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;      // runtime or input error
inline constexpr int kUsage = 2;        // bad flags or config
inline constexpr int kInterrupted = 3;  // sweep stopped early by --stop-after

/// Runs one command line; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace abcrm::cli
