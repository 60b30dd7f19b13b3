#pragma once

namespace toalab {

// Entry point behind the `toalab` executable. Subcommands: sweep, trial,
// timing, selftest. Exit codes: 0 success, 1 usage error, 2 config error,
// 3 selftest failure.
int cli_main(int argc, const char* const* argv);

} // namespace toalab
