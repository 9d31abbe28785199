#pragma once

#include <iosfwd>

namespace frugal::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kConsistency = 3 };

/// Parses argv and runs one subcommand. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace frugal::cli
