#pragma once

#include <string>
#include <vector>

namespace padicdiff::cli {

/// Runs the command-line front end. Exit codes: 0 success, 1 validation or
/// usage error, 2 numerical failure.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

} // namespace padicdiff::cli
