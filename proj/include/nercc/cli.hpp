#pragma once

#include <ostream>

namespace nercc {

/// Entry point of the `nercc` command line tool. Returns the process exit
/// code; diagnostics go to `err`, summaries to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nercc
