#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fvpinn {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitMissingInput = 4,
};

/// `<command> <config> [section.key=value ...] [--out DIR] [--seed N]`
/// (args exclude the program name). Failures print a one-line JSON error
/// record to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fvpinn
