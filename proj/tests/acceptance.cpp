#include <iostream>

#include <CLI11.hpp>

#include "rflight/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  rflight::AcceptanceOptions options;
  app.add_option("--seed", options.seed, "Root seed");
  app.add_option("--workers", options.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--sample-scale", options.sample_scale, "Multiplier on Monte Carlo sample counts")
      ->check(CLI::PositiveNumber);
  app.add_option("--criteria", options.criteria, "Subset of criteria to run");
  CLI11_PARSE(app, argc, argv);

  const rflight::AcceptanceReport report = rflight::run_acceptance(
      options, [](const rflight::CriterionResult& r) { std::cout << rflight::format_result(r) << std::endl; });
  std::size_t passed = 0;
  for (const auto& r : report.results) passed += r.passed ? 1 : 0;
  std::cout << passed << "/" << report.results.size() << " criteria passed" << std::endl;
  return report.all_passed() ? 0 : 1;
}
