#pragma once

#include <iosfwd>

namespace rover
{

enum ExitCode : int
{
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

/// Runs the `rover` command line. Results go to `out`, diagnostics to `err`.
int run_cli(int argc, const char * const * argv, std::ostream & out, std::ostream & err);

}  // namespace rover
