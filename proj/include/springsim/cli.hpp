#pragma once

#include <string>
#include <vector>

namespace springsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs the springsim command line. args[0] is the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace springsim
