#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pgbias::cli {

enum ExitCode : int { ok = 0, usage = 2, validation = 3, numerical = 4 };

/// Runs one command line (args excludes the program name). Results go to
/// `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pgbias::cli
