#pragma once

#include <iosfwd>

namespace l2pub {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;  // bad config, bad arguments, failed validation
inline constexpr int kExitIo = 2;

// Entry point of the l2pub tool; writes reports to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace l2pub
