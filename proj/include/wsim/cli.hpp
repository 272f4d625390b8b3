#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wsim {

// Command-line front end. Exit codes: 0 success, 2 usage/config error,
// 3 internal invariant violation.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wsim
