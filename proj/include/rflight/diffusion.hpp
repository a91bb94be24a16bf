#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "rflight/model.hpp"
#include "rflight/rng.hpp"

namespace rflight {

/// Coefficients of the limiting diffusion: drift b(x) = b_r(|x|) x/|x|,
/// isotropic variance sigma^2 = c/g^2 and clock rate lambda = g v.
class DiffusionCoefficients {
 public:
  explicit DiffusionCoefficients(const ModelConfig& config) : config_(config) {}

  const ModelConfig& config() const { return config_; }
  int dim() const { return config_.dim; }

  /// b_r = -(1/(d g^2)) [(d-1) U' / (m v^2) + g'/g].
  double radial_drift(double r) const;
  std::vector<double> drift(std::span<const double> x) const;
  double sigma2(double r) const;
  double clock_rate(double r) const;
  /// Bessel weight kappa of the radial projection: d-1 (Ito) or 1 (printed).
  double kappa() const;
  /// Drift of the radial process: b_r + (sigma^2 / 2) kappa / r.
  double radial_process_drift(double r) const;

 private:
  ModelConfig config_;
};

struct DiffusionOptions {
  double horizon = kInfinity;  // simulation time cap
  double dt = 1e-4;
  std::optional<std::pair<double, double>> band;
  /// Stop once the clock A reaches this value (for time changes).
  std::optional<double> clock_horizon;
  /// Record the state, clock and time at every step.
  bool record_path = false;
  /// Keep the state at this time (or at the exit time if earlier).
  std::optional<double> snapshot_time;
};

struct DiffusionPath {
  int state_dim = 0;
  std::vector<double> t;
  std::vector<std::vector<double>> states;
  std::vector<double> A;  // accumulated clock, int ds / lambda

  std::vector<double> final_state;
  double final_time = 0.0;
  double final_A = 0.0;
  bool exited = false;
  std::optional<double> exit_time;
  int exit_side = 0;  // -1 lower edge, +1 upper edge

  std::optional<std::vector<double>> snapshot;
  double snapshot_A = 0.0;
  std::size_t steps = 0;
};

/*
 * Euler-Maruyama x += b dt + sqrt(sigma^2 dt) xi for the d-dimensional
 * process with generator G. The clock accumulates by the trapezoid rule on
 * 1/lambda. A step that leaves the band is cut at the linearly
 * interpolated crossing, projected onto the edge radius.
 * Throws NumericError on non-finite coefficients; the run must be bounded
 * by a finite horizon, a band or a clock horizon.
 */
DiffusionPath simulate_G(std::span<const double> x0, const ModelConfig& config,
                         const DiffusionOptions& options, RngStream& rng);

/// Scalar radial process with drift radial_process_drift and variance sigma^2.
DiffusionPath simulate_Gr(double r0, const ModelConfig& config, const DiffusionOptions& options,
                          RngStream& rng);

/// Natural-scale process: drift and variance multiplied by lambda. Its
/// clock A is its own time.
DiffusionPath simulate_natural(std::span<const double> x0, const ModelConfig& config,
                               const DiffusionOptions& options, RngStream& rng);

/// Omega(t) = inf{s : A(s) > t} on the recorded clock, with linear
/// interpolation between grid points. Throws DomainError beyond the range.
double time_change_Omega(const DiffusionPath& path, double t);

/// Linear interpolation of the recorded states at diffusion time s.
std::vector<double> path_state_at(const DiffusionPath& path, double s);

/// CSV with columns t, x1..xd (or r), A.
void write_path_csv(const DiffusionPath& path, std::ostream& out);

struct TestFunction {
  std::function<double(std::span<const double>)> f;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  std::function<double(std::span<const double>)> laplacian;
};

/// f(x) = |x|^2.
TestFunction squared_norm_function();
/// f(x) = c . x.
TestFunction linear_function(std::vector<double> c);

/// G f(x) = b . grad f + (sigma^2 / 2) laplacian f.
double apply_generator(const TestFunction& f, std::span<const double> x,
                       const ModelConfig& config);

enum class ResidualMode { MonteCarlo, GaussHermite };

struct GeneratorResidual {
  double generator = 0.0;  // G f(x)
  std::vector<double> dt;
  std::vector<double> estimate;  // [E f(x_dt) - f(x)] / dt for one EM step
  std::vector<double> se;        // zero for Gauss-Hermite
  std::vector<double> residual;  // estimate - G f(x)
};

/// Monte Carlo mode uses rng.substream(k) for sample k at every dt (common
/// random numbers across the ladder); Gauss-Hermite mode integrates the
/// Gaussian step with a tensor rule of the given order.
GeneratorResidual generator_residual(const TestFunction& f, std::span<const double> x,
                                     const ModelConfig& config, std::span<const double> dts,
                                     ResidualMode mode, std::size_t samples,
                                     const RngStream& rng, int gh_order = 8);

}  // namespace rflight
