#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rflight/model.hpp"
#include "rflight/ode.hpp"

namespace rflight {

/// Position and (scaled) velocity with cached invariants. Energy is
/// reported in model units: sqrt(n) m |v|^2 / 2 + U(r), which equals E on
/// the energy surface.
struct PhaseState {
  std::vector<double> x;
  std::vector<double> v;
  double r = 0.0;
  double L = 0.0;
  double energy = 0.0;
};

double norm(std::span<const double> a);
double dot(std::span<const double> a, std::span<const double> b);
/// |x ^ v| = sqrt(|x|^2 |v|^2 - (x.v)^2), the angular momentum per unit
/// mass in any dimension.
double angular_momentum(std::span<const double> x, std::span<const double> v);
double instantaneous_energy(const ModelConfig& config, std::span<const double> x,
                            std::span<const double> v);

PhaseState make_phase_state(std::vector<double> x, std::vector<double> v,
                            const ModelConfig& config);

/// State at x moving in unit direction u with the scaled speed v_n(|x|).
PhaseState launch_state(std::span<const double> x, std::span<const double> u,
                        const ModelConfig& config);

/// One interpolation piece of a flight over [t0, t1]; the state vector is
/// (x, v, F) with F the accumulated hazard.
struct SegmentPiece {
  double t0 = 0.0;
  double t1 = 0.0;
  DenseStep dense;
};

struct PathSegment {
  std::vector<double> t;
  std::vector<PhaseState> states;
  std::vector<SegmentPiece> pieces;  // empty unless dense output was kept
  int interpolation_order = 7;
  int dim = 0;

  double duration() const { return t.empty() ? 0.0 : t.back(); }
  bool has_dense() const { return !pieces.empty(); }
  /// Full (x, v, F) vector at time t from the dense output.
  std::vector<double> eval(double t) const;
  PhaseState state_at(double t, const ModelConfig& config) const;
};

struct FlightOptions {
  double t_end = kInfinity;
  double hazard_target = kInfinity;
  std::optional<std::pair<double, double>> band;
  bool record_samples = false;
  bool keep_dense = false;
};

struct FlightResult {
  double duration = 0.0;
  PhaseState final_state;
  double hazard = 0.0;
  bool reached_target = false;
  std::optional<double> band_exit_time;
  double max_energy_drift = 0.0;  // relative to |E|
  double max_L_drift = 0.0;       // relative to max(L0, |x0||v0|)
  int origin_crossings = 0;
  std::size_t steps = 0;
  PathSegment segment;
};

/*
 * Integrates one free flight x' = v, v' = -U'(r)/(sqrt(n) m) x/r together
 * with the hazard F' = sqrt(n) g(r) |v|, until t_end or until F reaches
 * hazard_target (located by bisection on the dense output to 1e-12).
 *
 * Steps whose energy or angular momentum change exceeds ten times the
 * relative tolerance are retried at half size. Passing within origin_eps
 * of the origin applies the reflection extension y(t) = -y(2T - t); if the
 * speed there exceeds v_cap a SingularInfallError is thrown. Not reaching
 * a finite hazard target by t_max throws SlowRegionError.
 */
FlightResult fly(const PhaseState& start, const ModelConfig& config,
                 const FlightOptions& options);

/// Deterministic motion for t_end with recorded samples and dense output.
PathSegment integrate(const PhaseState& state, double t_end, const ModelConfig& config);

struct PolarSample {
  double t = 0.0;
  double r = 0.0;
  double alpha = 0.0;
  double r_dot = 0.0;
  double alpha_dot = 0.0;
  double r_ddot_residual = 0.0;  // |(|v|^2 - r_dot^2)/r - L0^2/r^3|
  bool flagged = false;          // r below origin_eps: alpha undefined
};

/// Polar description of the flight within its invariant plane.
std::vector<PolarSample> polar_reduce(const PathSegment& segment, const ModelConfig& config);

/// psi(r, r0, theta) = -U'(r)/m + v(r0)^2 r0^2 sin^2(theta) / r^3.
double psi(const ModelConfig& config, double r, double r0, double theta);

/// min over tau* in [0, t] of |r(t) - (r0 + v_n(r0) cos(theta) t +
/// psi(r(tau*), r0, theta) t^2 / (2 sqrt(n)))|.
double taylor_residual(const PathSegment& segment, double t, const ModelConfig& config);

}  // namespace rflight
