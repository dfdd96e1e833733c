#pragma once

#include <iosfwd>

namespace smn::cli {

enum ExitCode : int { ok = 0, usage_error = 1, data_error = 2, numeric_failure = 3 };

/// Entry point of the `smn` executable. Results go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace smn::cli
