#pragma once

#include <iosfwd>

namespace qgf::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_infeasible = 3,
  exit_oracle = 4,
};

/// Parses argv and runs one subcommand. Reports go to `out`; errors are a
/// single JSON object on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qgf::cli
