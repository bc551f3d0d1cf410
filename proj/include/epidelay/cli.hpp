#pragma once

#include <iosfwd>

namespace epidelay::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNotConverged = 3;

/// Entry point of the `epidelay` tool. Subcommands: simulate, fit, compare,
/// report, check, sbc. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace epidelay::cli
