#pragma once

namespace accel::app {

// Full command-line entry point (subcommand dispatch, config handling, run
// directory and artifact emission). Returns the process exit code:
// 0 success, 2 config error, 3 runtime/numerical error.
int run(int argc, const char* const* argv);

}  // namespace accel::app
