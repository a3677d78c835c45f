#pragma once

#include <iosfwd>

namespace graphrec {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the graphrec binary. Subcommands: serve, import, recommend,
// rerank, eval-sweep, eval-clicks, gen-synthetic, export-graph.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace graphrec
