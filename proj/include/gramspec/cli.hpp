#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gramspec {

/// Exit codes of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_verification_failed = 1, exit_usage = 2, exit_numerical = 3 };

/// Runs `gramspec <subcommand> ...`; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gramspec
