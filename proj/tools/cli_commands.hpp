#pragma once

namespace rrr::cli {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kIo = 3,
  kDimension = 4,
  kSolver = 5,
};

// Entry point shared by the executable and the tests.
int run_cli(int argc, char** argv);

}  // namespace rrr::cli
