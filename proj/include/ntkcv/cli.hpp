#pragma once

#include <ostream>

namespace ntkcv {

/// Entry point of the `ntkcv` tool. Returns the process exit code; errors are
/// reported on `err` and never escape as exceptions.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ntkcv
