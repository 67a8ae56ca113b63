#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace pagpass::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInternal = 3;

const char* tool_version();

// Runs one pipeline stage. args[0] is the program name. Human-readable
// reports go to `out`, diagnostics to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace pagpass::cli
