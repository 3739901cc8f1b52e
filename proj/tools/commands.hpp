#pragma once

#include <iosfwd>

namespace zzi::cli {

// Returns the process exit code: 0 ok, 1 physics/convergence failure, 2 input error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zzi::cli
