#pragma once

#include <functional>
#include <list>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rflight/dynamics.hpp"
#include "rflight/model.hpp"
#include "rflight/rng.hpp"

namespace rflight {

/// X_k with its scaled time T_k n^{-3/4} and raw time T_k. The direction,
/// duration and hazard target of the flight launched from X_k are filled
/// in once that flight is drawn (absent on the final record).
struct ReflectionRecord {
  std::size_t k = 0;
  std::vector<double> x;
  double t_scaled = 0.0;
  double t_raw = 0.0;
  std::vector<double> u;
  double N = 0.0;
  double target = 0.0;
  bool has_flight() const { return !u.empty(); }
};

/// Running summary of per-flight invariant drift.
struct ConservationStats {
  std::size_t flights = 0;
  std::size_t violations = 0;
  double max_energy_drift = 0.0;
  double max_L_drift = 0.0;

  void add(const FlightResult& flight, double tol);
  void merge(const ConservationStats& other);
};

struct StepOutcome {
  std::vector<double> x;
  double t_scaled = 0.0;
  std::vector<double> u;
  double N = 0.0;
  double target = 0.0;
  FlightResult flight;
};

/// One transition of the chain from (x, t): U uniform, N from the hazard,
/// next position y_n(x, v_n U, N), next time t + n^{-3/4} N. `rng` is the
/// flight's own stream.
StepOutcome step(std::span<const double> x, double t_scaled, const ModelConfig& config,
                 RngStream& rng, const FlightOptions& extra = {});

enum class StopReason { StepBudget, ExitedBand, SlowRegion, NumericFailure };

std::string to_string(StopReason r);

struct ChainOptions {
  std::size_t step_budget = 1000;
  std::optional<std::pair<double, double>> band;
  bool keep_records = true;
  /// Keep a copy of the record with this index even when records are not kept.
  std::optional<std::size_t> snapshot_index;
  /// Locate the first continuous band exit iota on the flights.
  bool track_iota = true;
};

struct ChainRun {
  int dim = 0;
  double n = 1.0;
  std::vector<double> x0;
  std::vector<ReflectionRecord> records;  // empty unless keep_records
  ReflectionRecord last;
  std::optional<ReflectionRecord> snapshot;
  std::size_t flights = 0;
  StopReason stop_reason = StopReason::StepBudget;
  std::string stop_detail;
  std::optional<std::size_t> tau;  // first index with |X_k| outside [l, u]
  std::optional<double> iota;      // first continuous exit, raw time
  ConservationStats conservation;
};

/// Flight k uses rng.substream(k). Numeric failures end the run with the
/// partial data and a SlowRegion / NumericFailure stop reason.
ChainRun run_chain(std::span<const double> x0, const ModelConfig& config,
                   const ChainOptions& options, const RngStream& rng);

/// Re-integrates stored flights on demand (small LRU cache) to evaluate
/// the continuous trajectory X^n(t) at raw times t.
class TrajectoryReconstructor {
 public:
  TrajectoryReconstructor(const ChainRun& run, const ModelConfig& config,
                          std::size_t cache_size = 8);

  double horizon() const;
  PhaseState state_at(double t_raw);
  std::vector<double> position_at(double t_raw) { return state_at(t_raw).x; }
  /// First continuous exit from [l, u] by event detection along the flights.
  std::optional<double> first_exit(double l, double u);

 private:
  const PathSegment& segment(std::size_t k);

  const ChainRun& run_;
  const ModelConfig& config_;
  std::size_t cache_size_;
  std::list<std::pair<std::size_t, PathSegment>> cache_;
};

std::vector<std::vector<double>> reconstruct_trajectory(const ChainRun& run,
                                                        const ModelConfig& config,
                                                        std::span<const double> times);

/// Piecewise-linear scaled time process T^n(s) on the records.
double interpolated_time_process(const ChainRun& run, double s);
/// Its inverse: the real index s with T^n(s) = t.
double inverse_time_process(const ChainRun& run, double t_scaled);

/// One JSON object per record: {k, x, t_scaled, t_raw, u}.
void write_chain_jsonl(const ChainRun& run, std::ostream& out);

}  // namespace rflight
