#pragma once

namespace mfmap {

// Entry point for the mfmap command line tool. Returns the process exit code:
// 0 success, 2 usage error, 3 data validation error, 4 numerical failure.
int run_cli(int argc, char** argv);

}  // namespace mfmap
