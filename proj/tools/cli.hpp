// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace inrrom::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kSolver = 3,
  kDivergence = 4,
  kIo = 5,
};

/// Runs one subcommand (`args` excludes the program name). Errors are
/// reported as a single `error: kind=<kind> reason=<text>` line on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace inrrom::cli
