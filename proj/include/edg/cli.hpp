#pragma once

// The `edgtool` command line, callable in-process.

#include <ostream>
#include <string>
#include <vector>

namespace edg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAlert = 1;  // alerts fired
inline constexpr int kExitError = 2;  // usage or data error

// `args` excludes the program name. Results go to `out` unless the
// subcommand writes to --out; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edg
