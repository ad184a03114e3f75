#pragma once

#include <iosfwd>

namespace lifg::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kSetup = 3 };

/// Entry point of the `lifg` command line tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lifg::cli
