#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lrc/config.hpp"
#include "lrc/error.hpp"
#include "lrc/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Linear reservoir computing: simulation, readout training and spectrum design"};
  app.set_version_flag("--version", std::string(lrc::kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  lrc::RunOptions options;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"optimize", "Design the eigenvalue spectrum and fit the readout"},
      {"simulate", "Simulate a reservoir and train a time-domain readout"},
      {"theorem-check", "Check coupled/decoupled and time/frequency readout equivalence"},
      {"sweep", "Benchmark sweep against random and nonlinear reservoirs"},
      {"sensitivity", "Error sensitivity to eigenvalue perturbations"},
      {"beta-study", "Optimization error over a grid of penalty weights"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--out", options.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Master seed (overrides optimizer.seed)");
    sub->add_option("--jobs", options.jobs, "Worker threads")->capture_default_str();
    sub->add_option("--set", overrides, "Config override, section.key=value (repeatable)");
    sub->add_flag("--force", options.force, "Overwrite existing artifacts");
    sub->add_flag("--strict", options.strict, "Nonzero exit when any benchmark cell failed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lrc::kExitConfig;
  }

  if (seed) overrides.push_back("optimizer.seed=" + std::to_string(*seed));
  lrc::RunConfig config;
  try {
    config = config_path.empty() ? lrc::parse_config("", overrides)
                                 : lrc::load_config(config_path, overrides);
  } catch (const lrc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lrc::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return lrc::run_command(command, config, options, std::cout, std::cerr);
}
