#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vcdet::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInput = 2,
  kExitConfig = 3,
  kExitProvider = 4,
};

/// Entry point for the `vcdet` tool. Data goes to `out`, diagnostics to `err`.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vcdet::cli
