#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace h3d {

// Runs the h3d command line. `args` excludes the program name.
// Exit codes: 0 success, 1 domain error, 2 usage error.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace h3d
