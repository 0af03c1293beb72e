#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace balance::cli {

// args excludes the program name. Returns the process exit code:
// 0 success, 1 runtime failure or replay mismatch, 2 bad flags, 3 no convergence.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct CommandOutput {
  std::string text;  // exactly what goes to stdout
  std::uint64_t seed = 0;
};

// Runs one subcommand with an already merged flag list.
CommandOutput run_subcommand(const std::string& name, const std::vector<std::string>& flags);

// Appends "--key value" for config keys the flag list does not already set.
std::vector<std::string> merge_config(std::vector<std::string> flags, const std::string& config_text);

std::string usage();

}  // namespace balance::cli
