#pragma once

#include <string>
#include <vector>

namespace chainsync::cli {

/// Runs the command-line front end on argv-style arguments (program name
/// excluded). Returns the process exit code: 0 on success, 1 on
/// configuration or usage errors, 2 on a tolerance breach.
int run(std::vector<std::string> args);

}  // namespace chainsync::cli
