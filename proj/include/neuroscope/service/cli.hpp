#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace neuroscope {

// neuroscope <gen|train|cv|eval|explain|rules|compare|serve|report> [--flags]
// Exit 0 on success, 1 on a validation error (with usage on `err` for bad
// flags), 2 on a runtime failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace neuroscope
