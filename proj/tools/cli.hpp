#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dafa::cli {

/// Runs the `dafa` command line. `args` excludes the program name.
/// Returns 0 on success, 1 on validation or gradient-check failure, 2 on
/// usage, I/O or parse errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dafa::cli
