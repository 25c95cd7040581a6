#pragma once

namespace flowcast::cli {

/// Entry point for the `flowcast` tool. Subcommands: generate, predict,
/// eval, viz. Returns the process exit code: 0 success, 2 bad usage or
/// invalid arguments, 3 I/O failure, 4 internal numeric failure.
int run(int argc, char** argv);

} // namespace flowcast::cli
