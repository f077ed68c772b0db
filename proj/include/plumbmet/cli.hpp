#pragma once

#include <string>
#include <vector>

namespace plumbmet {

/// Batch driver; returns the process exit code:
/// 0 success, 2 validation error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace plumbmet
