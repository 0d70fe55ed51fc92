#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace holeburn::cli {

enum ExitCode : int { kOk = 0, kIoError = 1, kValidation = 2, kConvergence = 3 };

// args excludes the program name. Diagnostics go to `err`, progress to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace holeburn::cli
