#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flowplan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses and runs one subcommand. Diagnostics go to `err`, reports to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flowplan::cli
