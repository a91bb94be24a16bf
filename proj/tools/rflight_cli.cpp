#include <iostream>

#include <CLI11.hpp>

#include "rflight/errors.hpp"
#include "rflight/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Random-flight simulation and verification engine"};
  app.require_subcommand(1);
  rflight::CommandLine cmd;
  std::string config_path;
  std::string output;
  int workers = 0;
  std::uint64_t seed = 0;

  const char* names[] = {"simulate-chain", "simulate-trajectory", "simulate-diffusion",
                         "ladder",         "classify-boundary",   "verify"};
  const char* help[] = {"Run the reflection chain",
                        "Reconstruct the continuous trajectory of one chain",
                        "Simulate the limiting diffusion",
                        "Convergence ladder of one-step moments over n",
                        "Classify the radial boundaries",
                        "Run the acceptance criteria"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--output", output, "Output directory (overrides the config)");
    sub->add_option("--workers", workers, "Worker threads (overrides the config)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed-override", seed, "Replace the configured seed");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? rflight::kExitOk : rflight::kExitConfig;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) cmd.kind = rflight::parse_experiment_kind(names[i]);
  }
  const CLI::App* sub = app.get_subcommands().front();
  cmd.config_path = config_path;
  if (sub->count("--output")) cmd.output = output;
  if (sub->count("--workers")) cmd.workers = workers;
  if (sub->count("--seed-override")) cmd.seed_override = seed;
  return rflight::run_command(cmd, std::cout, std::cerr);
}
