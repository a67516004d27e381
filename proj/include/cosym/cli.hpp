#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cosym {

/// Runs the command-line front end. args excludes the program name.
/// Exit codes: 0 pass, 1 invariant/tolerance failure, 2 invalid config,
/// 3 integration failure, 4 singular Legendre map.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace cosym
