#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dmd::cli {

/// Parses `args` (without the program name) and runs one subcommand.
/// Returns the process exit code.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmd::cli
