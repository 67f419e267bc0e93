#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rsparse {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitWeightFail = 3, kExitNumerical = 4 };

/// Entry point of the `rsparse` command; args excludes the program name.
/// Subcommands: generate, fit, weights, experiment.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rsparse
