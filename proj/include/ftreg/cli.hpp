#pragma once

#include <string>
#include <vector>

namespace ftreg {

/// Exit codes: 0 success, 2 configuration error, 3 data error,
/// 4 numerical failure.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

} // namespace ftreg
