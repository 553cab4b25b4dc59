#pragma once

#include <ostream>
#include <span>
#include <string>

namespace trajraster::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 1,
    kIoError = 2,
    kMemoryBudget = 3,
    kRastersDiffer = 4,
};

/// Runs one invocation. `args` excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace trajraster::cli
