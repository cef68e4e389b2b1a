#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lgaze/error.hpp"

namespace lgaze::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

int exit_code_for(ErrorKind kind) noexcept;

// Runs one command line (without the program name). Tables go to `out`,
// diagnostics to `err`, progress logs to stderr.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lgaze::cli
