#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "paug/harness.hpp"

namespace {

// Records a flag in the settings map only when it was given on the command line.
void option(CLI::App& cmd, paug::Settings& flags, const std::string& name,
            const std::string& help) {
  cmd.add_option_function<std::string>(
      "--" + name, [&flags, name](const std::string& v) { flags[name] = v; },
      help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy augmentation benchmark runner"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "run an experiment and write its outputs");
  paug::Settings flags;
  std::string config_file;
  std::string compare_agent;

  run->add_option("--config", config_file, "key = value settings file");
  option(*run, flags, "env", "mountaincar | cartpole");
  option(*run, flags, "agent", "paug-q | paug-dqn | eps | count | dqn");
  option(*run, flags, "episodes", "episodes per repetition");
  option(*run, flags, "reps", "repetitions");
  option(*run, flags, "seed", "base seed; repetition k uses seed + k");
  option(*run, flags, "out", "output directory");
  option(*run, flags, "tau-e", "augmented action horizon (steps)");
  option(*run, flags, "tau-q", "completion maintenance horizon (steps)");
  option(*run, flags, "solve-period", "steps between completion solves");
  option(*run, flags, "rank", "factor rank (0: full)");
  option(*run, flags, "threads", "worker threads (0: all cores)");
  option(*run, flags, "provenance", "write per-step action provenance");
  run->add_option("--compare", compare_agent, "overlay a second agent on the plot");

  CLI11_PARSE(app, argc, argv);

  try {
    paug::Settings settings;
    if (!config_file.empty()) settings = paug::load_settings(config_file);
    for (const auto& [k, v] : flags) settings[k] = v;
    const paug::ExperimentConfig config = paug::resolve_config(settings);

    std::optional<paug::ExperimentConfig> compare;
    if (!compare_agent.empty()) {
      paug::Settings other = settings;
      other["agent"] = compare_agent;
      compare = paug::resolve_config(other);
    }

    const auto result = paug::run_and_write(config, compare);
    int failed = 0;
    for (const auto& r : result.records) failed += r.error ? 1 : 0;
    std::cout << "wrote " << config.output_dir.string() << " ("
              << result.records.size() - failed << '/' << result.records.size()
              << " repetitions ok)\n";
    return failed == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
