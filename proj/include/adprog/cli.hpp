#ifndef ADPROG_CLI_HPP
#define ADPROG_CLI_HPP

namespace adprog::cli {

// Full command-line entry point. Returns the process exit code:
// 0 ok, 1 usage error, 2 data error, 3 numerical failure.
int run(int argc, const char* const* argv);

} // namespace adprog::cli

#endif
