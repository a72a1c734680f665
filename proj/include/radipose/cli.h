#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace radipose {

// Entry point of the radipose tool. `args` excludes the program name.
// Returns 0 on success, 1 on bad input or configuration and 2 when
// `estimate` finds no model.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace radipose
