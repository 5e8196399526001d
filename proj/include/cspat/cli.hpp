#pragma once

namespace cspat {

// Entry point of the command-line tool, callable in-process for testing.
// Returns the process exit code: 0 success, 2 configuration errors (the
// offending field path goes to stderr), 3 solver divergence, 1 anything else.
int cli_main(int argc, const char* const* argv);

}  // namespace cspat
