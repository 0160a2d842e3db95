#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sheetid {

/// Entry point behind the `sheetid` executable. `args` excludes the program
/// name. Returns the process exit status; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace sheetid
