#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uvgi::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 2;
inline constexpr int kDataError = 3;
inline constexpr int kRuntimeError = 4;

// Parses and runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uvgi::cli
