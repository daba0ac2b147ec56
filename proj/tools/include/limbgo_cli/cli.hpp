#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace limbgo::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kSelfCheck = 3 };

/// Entry point of the `limbgo` tool; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace limbgo::cli
