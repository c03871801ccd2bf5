#pragma once

#include <iosfwd>

namespace ihope::cli {

/// Full command-line entry point. Returns 0 on success, 1 on a runtime
/// error and 2 on a usage error; errors are written to `err` as JSON.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace ihope::cli
