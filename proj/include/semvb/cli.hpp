#pragma once

#include <string>
#include <vector>

namespace semvb {

/// Runs the command-line interface. Exit codes: 0 success, 2 validation
/// error, 3 non-convergence (outputs still written), 4 numerical failure.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace semvb
