#ifndef LOGITDYN_TOOLS_CLI_H_
#define LOGITDYN_TOOLS_CLI_H_

#include <ostream>

namespace logitdyn::cli {

// Exit codes of the logitdyn binary.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kNumeric = 3,
};

// Parses argv and runs one subcommand. Human-readable progress goes to
// `out` unless --quiet; with --json a single JSON document goes to `out`.
int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace logitdyn::cli

#endif  // LOGITDYN_TOOLS_CLI_H_
