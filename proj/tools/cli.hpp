#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fgir::cli {

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kDataError = 2,
  kInternal = 3,
};

/// Runs the `fgir` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fgir::cli
