#pragma once
#include <ostream>

namespace optiroute {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `optiroute` command. Output goes to `out`, diagnostics
/// to `err`; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace optiroute
