#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace agg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitOracle = 3;
inline constexpr int kExitTimeout = 4;

/// Runs one `aggbench` invocation. args[0] is the program name. Results go
/// to `out` (or the --output file), diagnostics to `err`.
int parse_and_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int parse_and_run(int argc, const char* const* argv);

}  // namespace agg::cli
