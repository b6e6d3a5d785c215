#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fmvo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand: gen, train, infer, eval or ablate-steps.
// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fmvo::cli
