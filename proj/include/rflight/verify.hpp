#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rflight {

struct AcceptanceOptions {
  std::uint64_t seed = 20261015;
  int workers = 1;
  /// Criteria to run (1..13); empty runs all.
  std::vector<int> criteria;
  /// Multiplies every Monte Carlo sample count (1 = full size).
  double sample_scale = 1.0;
  /// Worker count of the determinism rerun (criterion 13).
  int determinism_workers = 3;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  nlohmann::ordered_json metrics;
  double seconds = 0.0;
};

struct AcceptanceReport {
  std::uint64_t seed = 0;
  double sample_scale = 1.0;
  std::vector<CriterionResult> results;

  bool all_passed() const;
  /// Deterministic summary: no timing, no worker count.
  nlohmann::ordered_json summary() const;
  nlohmann::ordered_json timing() const;
};

/// One "[PASS] <id> <name>: <detail>" line.
std::string format_result(const CriterionResult& r);

std::vector<int> all_criteria();
std::string criterion_name(int id);

/// Runs the selected criteria in order; `progress` sees each result as it
/// completes.
AcceptanceReport run_acceptance(const AcceptanceOptions& options,
                                const std::function<void(const CriterionResult&)>& progress = {});

}  // namespace rflight
