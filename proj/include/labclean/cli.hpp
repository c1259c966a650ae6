#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace labclean {

/// Runs one `labclean` command. `args` excludes the program name.
/// Data goes to `out`, line-delimited JSON logs to `err`.
/// Returns 0 on success, 1 for usage or configuration errors and 2 for data errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace labclean
