#pragma once

namespace helios::cli {

/// Entry point for the `helios` binary. Exit codes: 0 success,
/// 1 computation failure, 2 usage/configuration error.
int run_cli(int argc, const char* const* argv);

}  // namespace helios::cli
