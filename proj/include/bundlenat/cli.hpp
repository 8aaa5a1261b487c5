#pragma once

#include <string>
#include <vector>

namespace bundlenat {

// Stage dispatcher behind the `bundlenat` binary; exposed for in-process
// testing. Exit codes: 0 success, 1 usage, 2 data/format/config, 3 numerical.
int run_cli(const std::vector<std::string>& args);

}  // namespace bundlenat
