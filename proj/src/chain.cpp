#include "rflight/chain.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "rflight/collision.hpp"
#include "rflight/errors.hpp"

namespace rflight {

void ConservationStats::add(const FlightResult& flight, double tol) {
  ++flights;
  max_energy_drift = std::max(max_energy_drift, flight.max_energy_drift);
  max_L_drift = std::max(max_L_drift, flight.max_L_drift);
  if (flight.max_energy_drift > tol || flight.max_L_drift > tol) ++violations;
}

void ConservationStats::merge(const ConservationStats& other) {
  flights += other.flights;
  violations += other.violations;
  max_energy_drift = std::max(max_energy_drift, other.max_energy_drift);
  max_L_drift = std::max(max_L_drift, other.max_L_drift);
}

StepOutcome step(std::span<const double> x, double t_scaled, const ModelConfig& config,
                 RngStream& rng, const FlightOptions& extra) {
  StepOutcome out;
  out.u = sample_direction(rng, config.dim);
  FreeTimeSample f = sample_free_time(x, out.u, config, rng, extra);
  out.N = f.N;
  out.target = f.target;
  out.x = f.flight.final_state.x;
  out.t_scaled = t_scaled + std::pow(config.n, -0.75) * f.N;
  out.flight = std::move(f.flight);
  return out;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::StepBudget:
      return "step_budget";
    case StopReason::ExitedBand:
      return "exited_band";
    case StopReason::SlowRegion:
      return "slow_region";
    case StopReason::NumericFailure:
      return "numeric_failure";
  }
  return "?";
}

ChainRun run_chain(std::span<const double> x0, const ModelConfig& config,
                   const ChainOptions& options, const RngStream& rng) {
  ChainRun run;
  run.dim = config.dim;
  run.n = config.n;
  run.x0.assign(x0.begin(), x0.end());
  const double tol = config.numerics.invariant_tol;
  const double time_scale = std::pow(config.n, -0.75);

  ReflectionRecord current;
  current.k = 0;
  current.x = run.x0;
  auto outside = [&](double r) {
    return options.band && (r < options.band->first || r > options.band->second);
  };
  auto keep_snapshot = [&](const ReflectionRecord& rec) {
    if (options.snapshot_index && *options.snapshot_index == rec.k) run.snapshot = rec;
  };

  if (outside(norm(current.x))) {
    run.tau = 0;
    run.iota = 0.0;
    run.stop_reason = StopReason::ExitedBand;
    keep_snapshot(current);
    if (options.keep_records) run.records.push_back(current);
    run.last = current;
    return run;
  }

  FlightOptions flight_options;
  if (options.band && options.track_iota) flight_options.band = options.band;

  for (std::size_t k = 0; k < options.step_budget; ++k) {
    RngStream stream = rng.substream(k);
    StepOutcome out;
    try {
      out = step(current.x, current.t_scaled, config, stream,
                 run.iota ? FlightOptions{} : flight_options);
    } catch (const SlowRegionError& e) {
      run.stop_reason = StopReason::SlowRegion;
      run.stop_detail = e.what();
      break;
    } catch (const NumericError& e) {
      run.stop_reason = StopReason::NumericFailure;
      run.stop_detail = e.what();
      break;
    } catch (const DomainError& e) {
      run.stop_reason = StopReason::NumericFailure;
      run.stop_detail = e.what();
      break;
    }
    run.conservation.add(out.flight, tol);
    ++run.flights;
    if (!run.iota && out.flight.band_exit_time) {
      run.iota = current.t_raw + *out.flight.band_exit_time;
    }
    current.u = out.u;
    current.N = out.N;
    current.target = out.target;
    keep_snapshot(current);
    if (options.keep_records) run.records.push_back(current);

    ReflectionRecord next;
    next.k = k + 1;
    next.x = std::move(out.x);
    next.t_raw = current.t_raw + out.N;
    next.t_scaled = time_scale * next.t_raw;
    current = std::move(next);
    if (outside(norm(current.x))) {
      run.tau = current.k;
      run.stop_reason = StopReason::ExitedBand;
      break;
    }
  }
  keep_snapshot(current);
  if (options.keep_records) run.records.push_back(current);
  run.last = current;
  return run;
}

TrajectoryReconstructor::TrajectoryReconstructor(const ChainRun& run, const ModelConfig& config,
                                                 std::size_t cache_size)
    : run_(run), config_(config), cache_size_(std::max<std::size_t>(cache_size, 1)) {
  if (run.records.empty()) {
    throw DomainError("TrajectoryReconstructor: the run kept no records");
  }
}

double TrajectoryReconstructor::horizon() const { return run_.records.back().t_raw; }

const PathSegment& TrajectoryReconstructor::segment(std::size_t k) {
  for (auto it = cache_.begin(); it != cache_.end(); ++it) {
    if (it->first == k) {
      cache_.splice(cache_.begin(), cache_, it);
      return cache_.front().second;
    }
  }
  const ReflectionRecord& rec = run_.records[k];
  FlightOptions options;
  options.keep_dense = true;
  FreeTimeSample f = free_flight_for_target(rec.x, rec.u, config_, rec.target, options);
  cache_.emplace_front(k, std::move(f.flight.segment));
  if (cache_.size() > cache_size_) cache_.pop_back();
  return cache_.front().second;
}

PhaseState TrajectoryReconstructor::state_at(double t) {
  const auto& recs = run_.records;
  if (!(t >= 0.0) || t > horizon()) {
    throw DomainError("reconstruct_trajectory: time outside the run's horizon");
  }
  // Last record with t_raw <= t.
  auto it = std::upper_bound(recs.begin(), recs.end(), t,
                             [](double tv, const ReflectionRecord& r) { return tv < r.t_raw; });
  const std::size_t k = static_cast<std::size_t>(std::distance(recs.begin(), it)) - 1;
  const ReflectionRecord& rec = recs[k];
  // The terminal record has no outgoing flight; take the end of the incoming one.
  if (!rec.has_flight() && k > 0 && recs[k - 1].has_flight()) {
    const PathSegment& seg = segment(k - 1);
    PhaseState s = seg.state_at(seg.pieces.back().t1, config_);
    s.x = rec.x;
    return s;
  }
  if (t == rec.t_raw || !rec.has_flight()) {
    const double vn = scaled_speed(config_, norm(rec.x));
    std::vector<double> v(rec.x.size(), 0.0);
    if (rec.has_flight()) {
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = vn * rec.u[i];
    }
    return make_phase_state(rec.x, v, config_);
  }
  const PathSegment& seg = segment(k);
  const double local = std::min(t - rec.t_raw, seg.pieces.back().t1);
  return seg.state_at(local, config_);
}

std::optional<double> TrajectoryReconstructor::first_exit(double l, double u) {
  const auto& recs = run_.records;
  for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
    const double r = norm(recs[k].x);
    if (r < l || r > u) return recs[k].t_raw;
    FlightOptions options;
    options.band = std::make_pair(l, u);
    const FreeTimeSample f =
        free_flight_for_target(recs[k].x, recs[k].u, config_, recs[k].target, options);
    if (f.flight.band_exit_time) return recs[k].t_raw + *f.flight.band_exit_time;
  }
  const double r = norm(recs.back().x);
  if (r < l || r > u) return recs.back().t_raw;
  return std::nullopt;
}

std::vector<std::vector<double>> reconstruct_trajectory(const ChainRun& run,
                                                        const ModelConfig& config,
                                                        std::span<const double> times) {
  TrajectoryReconstructor rec(run, config);
  std::vector<std::vector<double>> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(rec.position_at(t));
  return out;
}

double interpolated_time_process(const ChainRun& run, double s) {
  const auto& recs = run.records;
  if (recs.empty() || !(s >= 0.0) || s > static_cast<double>(recs.size() - 1)) {
    throw DomainError("interpolated_time_process: index out of range");
  }
  const auto k = static_cast<std::size_t>(std::floor(s));
  if (k + 1 >= recs.size()) return recs.back().t_scaled;
  const double frac = s - static_cast<double>(k);
  return recs[k].t_scaled + frac * (recs[k + 1].t_scaled - recs[k].t_scaled);
}

double inverse_time_process(const ChainRun& run, double t) {
  const auto& recs = run.records;
  if (recs.empty() || t < recs.front().t_scaled || t > recs.back().t_scaled) {
    throw DomainError("inverse_time_process: time out of range");
  }
  auto it = std::upper_bound(recs.begin(), recs.end(), t,
                             [](double tv, const ReflectionRecord& r) { return tv < r.t_scaled; });
  const std::size_t k = static_cast<std::size_t>(std::distance(recs.begin(), it)) - 1;
  if (k + 1 >= recs.size() || recs[k].t_scaled == t) return static_cast<double>(k);
  return k + (t - recs[k].t_scaled) / (recs[k + 1].t_scaled - recs[k].t_scaled);
}

void write_chain_jsonl(const ChainRun& run, std::ostream& out) {
  for (const auto& rec : run.records) {
    nlohmann::ordered_json j;
    j["k"] = rec.k;
    j["x"] = rec.x;
    j["t_scaled"] = rec.t_scaled;
    j["t_raw"] = rec.t_raw;
    j["u"] = rec.u;
    out << j.dump() << "\n";
  }
}

}  // namespace rflight
