#pragma once

#include <iosfwd>

namespace rlb::cli {

// Exit codes: 0 success, 1 validation error, 2 runtime error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rlb::cli
