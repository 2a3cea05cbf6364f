#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sepmdp::cli {

/// Exit codes of the `sepmdp` tool.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kValidation = 2,
  kNotIrreducible = 3,
  kInfeasibleEpsilon = 4,
  kInternal = 5,
};

/// Runs the tool with `args` (excluding the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sepmdp::cli
