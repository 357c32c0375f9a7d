#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace diffcal {

/// Runs one `diffcal` invocation. `args` excludes the program name.
/// Returns the process exit code (see diffcal::exit_code).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace diffcal
