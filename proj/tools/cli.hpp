#pragma once

#include <iosfwd>

namespace ctrace {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitCap = 3,
  kExitVerification = 4,
  kExitOther = 5,
};

/// Parses `argv` and runs one subcommand. Reports go to --out when given,
/// otherwise to `out`; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ctrace
