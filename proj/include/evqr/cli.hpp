#pragma once

#include <string>
#include <vector>

namespace evqr::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kDataError = 2,
  kInternalError = 3,
};

/// Entry point of the `evqr` tool: subcommands fit, extreme, select, simulate.
int run(int argc, char** argv);
/// Same, with argv[0] supplied internally.
int run(const std::vector<std::string>& args);

}  // namespace evqr::cli
