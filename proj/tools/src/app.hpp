#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hybridmeas::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kOk = 0,
  kSelftestFailed = 1,
  kUsage = 2,       ///< bad flags, config or parameters
  kComputation = 3, ///< numerical, grid, cutoff or domain failure
  kWrite = 4,       ///< output directory or file not writable
};

/// Runs the tool on `args` (without the program name). Progress goes to
/// `out`; errors go to `err` as one JSON object.
int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hybridmeas::cli
