#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace switchnet::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalFailure = 3 };

/// Entry point of the `switchnet` tool. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace switchnet::cli
