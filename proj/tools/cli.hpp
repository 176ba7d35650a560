#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace omninav::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kSuccess = 0, kDomainFailure = 1, kUsageError = 2 };

/// Runs the command line `args` (program name excluded). Normal output goes to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace omninav::cli
