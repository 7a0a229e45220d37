#pragma once

#include <ostream>

namespace tflow {

/// Subcommands: validate, simulate, sweep, compare. Returns 0 on success,
/// 1 on invalid input, 2 on a runtime failure. Errors go to `err` as JSON.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int cli_main(int argc, const char* const* argv);

}  // namespace tflow
