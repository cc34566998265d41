#pragma once

#include <iosfwd>

namespace scl {

/// Exit statuses of the command-line front end.
enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,          ///< io and other runtime errors
  exit_usage = 2,            ///< bad flags, spec strings or input files
  exit_insufficient = 3,     ///< not enough data or a failed fit
  exit_missing_horizons = 4,
  exit_missing_trsigma = 5,
  exit_coverage = 6,
};

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scl
