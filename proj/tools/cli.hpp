#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tucker::cli {

/// Runs the `tucker` command line with `args` (args[0] is the program name).
/// Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tucker::cli
