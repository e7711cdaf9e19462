#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace focus3d::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kVerification = 2,
    kSolver = 3,
};

/// Runs one command line (without the program name). Data goes to --out or to
/// out; diagnostics and summaries go to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Grid syntax: "a:b:n" for n evenly spaced points from a to b, or a comma list.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace focus3d::cli
