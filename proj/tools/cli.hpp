#pragma once

#include <ostream>

namespace mctsteg::cli {

/// Entry point of the `mctsteg` tool. Exit status 0 on success, 1 when a
/// module reports an error (a JSON error record goes to `err`), 2 on usage
/// errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mctsteg::cli
