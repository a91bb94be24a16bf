#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rflight/model.hpp"

namespace rflight {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitAssertion = 4;

enum class ExperimentKind {
  SimulateChain,
  SimulateTrajectory,
  SimulateDiffusion,
  Ladder,
  ClassifyBoundary,
  Verify
};

std::string to_string(ExperimentKind kind);
/// Accepts the subcommand names; throws ConfigError otherwise.
ExperimentKind parse_experiment_kind(const std::string& name);

struct DensityConfig {
  std::string kind = "constant";  // constant | linear | expression
  double g0 = 1.0;
  double beta = 0.0;
  std::string expression;
};

struct ScenarioConfig {
  std::string name = "heuristic-1.2";  // a library scenario or "custom"
  std::map<std::string, double> params;
  int dim = 3;
  std::optional<DensityConfig> density;
  // Custom scenarios only.
  std::string potential;
  bool singular_at_origin = false;
  double mass = 2.0;
  double energy = 1.0;
  double search_lower = 0.0;
  double search_upper = kInfinity;
  double seed_radius = 0.5;
};

struct ChainSection {
  std::size_t steps = 1000;
  std::size_t replicas = 1;
};

struct TrajectorySection {
  std::size_t points = 200;
};

struct DiffusionSection {
  std::string process = "G";  // G | Gr | natural
  double dt = 1e-4;
  double horizon = 1.0;       // infinite when null in the file
  std::size_t paths = 1000;
  std::optional<double> snapshot_time;
  std::size_t record_paths = 1;
};

struct LadderSection {
  std::vector<double> n_values{1e2, 1e4, 1e6};
  std::size_t samples = 10000;
};

struct BoundarySection {
  std::optional<std::string> expect_lower;
  std::optional<std::string> expect_upper;
};

struct VerifySection {
  std::vector<int> criteria;  // empty: all
  double sample_scale = 1.0;
  int determinism_workers = 3;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::SimulateChain;
  std::uint64_t seed = 0;
  ScenarioConfig scenario;
  RadialConvention radial = RadialConvention::Ito;
  CovarianceConvention covariance = CovarianceConvention::TwoOverD;
  Numerics numerics;
  double n = 1e4;
  std::optional<std::vector<double>> x0;
  double r0 = 0.5;
  std::optional<std::pair<double, double>> band;
  ChainSection chain;
  TrajectorySection trajectory;
  DiffusionSection diffusion;
  LadderSection ladder;
  BoundarySection boundary;
  VerifySection verify;
  // Runtime settings, not part of the echoed configuration.
  int workers = 1;
  std::string output = "rflight_out";

  /// x0 if given, else (r0, 0, ..., 0).
  std::vector<double> launch_point() const;
};

/*
 * Parses JSON with // and block comments. Unknown keys, wrong types and a
 * missing seed raise ConfigError naming the field and its line. An
 * "experiment" key, when present, must match `kind`.
 */
ExperimentConfig parse_config_text(const std::string& text, ExperimentKind kind);
ExperimentConfig parse_config(const std::filesystem::path& path, ExperimentKind kind);

/// Fully resolved configuration (every default materialized); parsing the
/// dump reproduces the same configuration.
nlohmann::ordered_json resolved_json(const ExperimentConfig& config);

/// Builds and validates the model; a failed assumption check raises
/// ConfigError carrying the validation report.
ModelConfig build_model(const ExperimentConfig& config);

struct ExperimentOutcome {
  int exit_code = kExitOk;
  nlohmann::ordered_json summary;
};

/// Runs the configured pipeline, writing resolved_config.json, the data
/// files and summary.json into config.output.
ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

struct CommandLine {
  ExperimentKind kind = ExperimentKind::SimulateChain;
  std::string config_path;
  std::optional<std::string> output;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed_override;
};

/// Parse, run and map failures to exit codes (config 2, numeric 3,
/// assertion 4).
int run_command(const CommandLine& cmd, std::ostream& log, std::ostream& err);

}  // namespace rflight
