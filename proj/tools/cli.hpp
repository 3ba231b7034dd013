#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scopealign::cli {

// Exit codes. Stable: scripts depend on them.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kIo = 3;
inline constexpr int kValidation = 4;

/// Runs one subcommand. `args` excludes the program name. Errors go to `err`
/// as a single "error: <kind>: <message>" line.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace scopealign::cli
