#pragma once

#include <iosfwd>

#include "dmd/cli/run_config.hpp"

namespace dmd::cli {

/// Quick oracle checks of the installed library; prints one line per check.
bool RunSelfTest(const RunConfig& cfg, std::ostream& out);

}  // namespace dmd::cli
