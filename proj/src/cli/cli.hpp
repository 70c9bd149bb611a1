#pragma once

#include <ostream>

namespace sumfact::cli {

enum ExitCode : int { kOk = 0, kPartialFailure = 1, kConfigError = 2 };

/// Entry point behind the `sumfact` binary; usable in-process by tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sumfact::cli
