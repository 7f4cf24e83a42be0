#pragma once

#include <string>
#include <vector>

namespace graphdiff {

// Runs one subcommand (dataset | train | sample | eval). Returns the process
// exit code: 0 success, 1 validation/usage failure, 2 I/O failure.
// Errors are reported on stderr; normal progress goes to stdout.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, char** argv);

}  // namespace graphdiff
