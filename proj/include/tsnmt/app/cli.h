#pragma once

#include <iosfwd>

namespace tsnmt::app {

// Entry point of the `tsnmt` tool. Returns 0 on success, 2 on a usage error
// and 1 on a runtime failure; diagnostics go to `err`, results to `out`, and
// the resolved configuration of every run is echoed to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tsnmt::app
