#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ndmt {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitValidation = 2;

// Runs one ndmt-eval invocation. args excludes the program name. Progress
// goes to `out`; errors are written to `err` as one JSON object per line.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ndmt
