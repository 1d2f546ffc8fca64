#pragma once

#include <iosfwd>

namespace sem {

/// Entry point of the `sem` tool. Returns 0 on success, 2 on usage errors
/// and 1 when a pipeline fails.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sem
