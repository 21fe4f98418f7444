#pragma once

#include <ostream>

namespace fof {

/// Entry point of the fof-slasso command line. Returns the process exit
/// code: 0 success, 1 numeric or solver failure, 2 usage or parse failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fof
