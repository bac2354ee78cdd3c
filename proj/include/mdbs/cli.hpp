#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mdbs {

// The mdbs command-line driver. Exit codes: 0 success, 1 validation error,
// 2 I/O error, 3 convergence-check inequality.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

} // namespace mdbs
