#pragma once

#include <iosfwd>

namespace divret::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsage = 1,
    kInvalidInput = 2,
    kRemoteFailure = 3,
};

/// Entry point shared by the executable and the tests.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace divret::cli
