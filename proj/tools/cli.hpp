#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace scalardyn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumerical = 4;

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs the command line `args` (args[0] is the program name). Returns the
/// process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scalardyn::cli
