#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace operatrack::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDataError = 2 };

/// Runs the operatrack command line. `args` excludes the program name. Reports go to `out`,
/// diagnostics and progress to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace operatrack::cli
