#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace birkhoff::cli {

inline constexpr const char* kVersion = "bspec 0.1.0";

/// Runs the command line front end. Exit codes: 0 success, 1 parse or
/// validation failure, 2 refusal on an irregular problem, 3 a verification
/// campaign found a counterexample.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_main(int argc, char** argv);

}  // namespace birkhoff::cli
