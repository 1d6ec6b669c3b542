#pragma once

#include <iosfwd>

namespace vqqa {

// Entry point behind the `vqqa` executable; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vqqa
