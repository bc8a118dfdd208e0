#pragma once

#include <ostream>

namespace bpoa {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitCapExceeded = 3;
inline constexpr int kExitNotConverged = 4;
inline constexpr int kExitNotEquilibrium = 5;

// Entry point of the bpoa command line tool. JSON results go to --out or,
// without it, to `out`; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace bpoa
