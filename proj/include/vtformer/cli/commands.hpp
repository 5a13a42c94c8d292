#pragma once

#include <iosfwd>

namespace vtformer::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitDivergence = 4,
};

// Entry point of the `vtformer` tool. Subcommands: prepare, gen-synthetic,
// train, eval, predict, sweep, config. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vtformer::cli
