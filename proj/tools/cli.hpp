#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xview::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand (synth, annotate, train, ground, eval, report).
// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace xview::cli
