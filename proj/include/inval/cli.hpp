#pragma once

#include <iostream>

namespace inval {

/// Entry point of the `inval` tool. Returns 0 on success, 1 when a stage fails,
/// 2 on a usage error (help text goes to `err`).
int cli_run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace inval
