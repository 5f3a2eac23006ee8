#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hcorr::cli {

/// Documented process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitParse = 2,
    kExitEstimation = 3,
    kExitRepair = 4,
};

/// Runs the command line `args` (args[0] is the program name) and returns the
/// exit code. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hcorr::cli
