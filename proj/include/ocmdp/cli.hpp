#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ocmdp {

// Exit codes: 0 yes (or success), 1 no, 2 inconclusive, 3 usage or data error.
enum ExitCode { kExitYes = 0, kExitNo = 1, kExitInconclusive = 2, kExitError = 3 };

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ocmdp
