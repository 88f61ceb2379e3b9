#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace moodspace::cli {

/// Exit codes: 0 success, 1 user error, 2 internal error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitInternalError = 2;

/// Runs one command line (args[0] is the program name). Machine-readable
/// results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace moodspace::cli
