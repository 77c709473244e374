#pragma once

#include <ostream>

namespace bmcomp {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInfeasible = 3,
  kExitDelta = 4,
};

/// Entry point of the bmcomp command line; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bmcomp
