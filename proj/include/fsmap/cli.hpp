#pragma once

#include <ostream>

namespace fsmap {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPropertyFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of `fsmap-lab <command> [flags]`; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fsmap
