#pragma once

// The `cpa` batch tool: parses arguments, loads the configuration, runs one
// subcommand and writes CSV files, each with a `.meta.json` sidecar.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cpa_cli/config.hpp"

namespace cpa::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kAssertionFailure = 3 };

const std::vector<std::string>& command_names();

/// Writes CSV files into one directory and a metadata sidecar next to each.
class OutputSet {
 public:
  OutputSet(std::filesystem::path dir, std::string command, const RunConfig& config);

  void write(const std::string& name, const std::function<void(std::ostream&)>& body);
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::string command_;
  const RunConfig& config_;
  std::vector<std::filesystem::path> files_;
};

/// Runs one subcommand on a loaded configuration. `quick` only affects validate.
int run_command(const std::string& command, const RunConfig& config, bool quick, std::ostream& log);

/// Full entry point; argv[0] is the program name.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cpa::cli
