#include <ostream>

#include <CLI11.hpp>

#include "cpa/errors.hpp"
#include "cpa/format.hpp"
#include "cpa_cli/cli.hpp"

namespace cpa::cli {

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contact process with aging: simulation and Monte Carlo experiments", "cpa"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<int> threads;
  std::optional<double> t_max;
  std::optional<double> t;
  std::string output;
  std::vector<std::string> overrides;
  bool quick = false;
  app.add_option("-c,--config", config_path, "INI configuration file");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--trials", trials, "number of trials");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--t-max", t_max, "time horizon of each trial");
  app.add_option("--t", t, "time of the trace command");
  app.add_option("-o,--out", output, "output directory");
  app.add_option("--set", overrides, "override one entry, section.key=value")->take_all();
  app.add_flag("--quick", quick, "validate: 100 scenarios instead of 1000");
  for (const auto& name : command_names()) app.add_subcommand(name, "run the " + name + " experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig config;
  try {
    if (!config_path.empty()) config = RunConfig::from_file(config_path);
    if (seed) config.set("run.seed", std::to_string(*seed));
    if (trials) config.set("run.trials", std::to_string(*trials));
    if (threads) config.set("run.threads", std::to_string(*threads));
    if (t_max) config.set("run.t_max", format_double(*t_max));
    if (t) config.set("trace.t", format_double(*t));
    if (!output.empty()) config.set("run.output", output);
    for (const auto& o : overrides) config.apply_override(o);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kConfigError;
  }

  try {
    return run_command(command, config, quick, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "invalid parameter: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace cpa::cli
