#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dinozaur::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kNumeric = 3, kFormat = 4 };

/// Parses `args` (without the program name) and runs one of gen-data, train,
/// eval, params, gradcheck, sample. Diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dinozaur::cli
