#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sevot::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kNumericalError = 3 };

// Runs one command line (args[0] is the program name). Exit codes: 0 success,
// 2 input or validation error, 3 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sevot::cli
