#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nhse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // I/O and other runtime errors
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point used by main() and by the tests. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nhse::cli
