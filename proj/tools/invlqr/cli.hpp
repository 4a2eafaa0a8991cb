#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace invlqr::cli {

enum ExitCode : int { kOk = 0, kInfeasible = 1, kInputError = 2, kSolverFailure = 3 };

// Runs one invocation; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version();

}  // namespace invlqr::cli
