#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ucplan::cli {

/// Exit codes: 0 success, 1 infeasible planning instance, 2 configuration
/// error or unknown command, 3 any other failure. Outputs are written only
/// on success.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ucplan::cli
