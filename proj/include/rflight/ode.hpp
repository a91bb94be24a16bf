#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace rflight {

struct OdeTolerance {
  double abs = 1e-10;
  double rel = 1e-10;
};

/// Seventh-order continuous extension of one accepted DOP853 step.
class DenseStep {
 public:
  DenseStep() = default;
  DenseStep(double t0, double h, std::size_t dim) : t0_(t0), h_(h), dim_(dim), rc_(8 * dim) {}

  double t_begin() const { return t0_; }
  double t_end() const { return t0_ + h_; }
  std::size_t dim() const { return dim_; }

  void eval(double t, std::span<double> out) const;
  double eval_component(double t, std::size_t i) const;

  std::span<double> coefficients(std::size_t k) { return {rc_.data() + k * dim_, dim_}; }

 private:
  double t0_ = 0.0;
  double h_ = 0.0;
  std::size_t dim_ = 0;
  std::vector<double> rc_;
};

/*
 * Dormand-Prince 8(5,3) explicit Runge-Kutta stepper with error control
 * and dense output, after Hairer & Wanner's DOP853.
 *
 * step() performs one accepted step that never passes t_stop. A step that
 * satisfies the error estimate can still be vetoed by the step check (for
 * invariant monitoring); it is then retried at half size.
 */
class Dop853 {
 public:
  using Rhs = std::function<void(double, std::span<const double>, std::span<double>)>;
  using StepCheck =
      std::function<bool(std::span<const double> y_old, std::span<const double> y_new)>;

  Dop853(Rhs rhs, std::size_t dim, OdeTolerance tol = {});

  void reset(double t, std::span<const double> y, double h_initial = 0.0);
  void set_step_check(StepCheck check) { check_ = std::move(check); }
  void set_max_step(double h_max) { h_max_ = h_max; }

  /// Returns true when t() == t_stop after the step. Throws NumericError
  /// on step-size underflow.
  bool step(double t_stop);

  double t() const { return t_; }
  double t_prev() const { return t_prev_; }
  std::span<const double> y() const { return y_; }
  std::span<const double> y_prev() const { return y_prev_; }
  std::span<const double> dydt() const { return s1_; }
  double suggested_step() const { return h_; }
  std::size_t dim() const { return dim_; }

  /// Interpolant over [t_prev, t]; costs three extra evaluations.
  DenseStep dense();

  std::size_t rhs_evaluations() const { return evaluations_; }
  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }

 private:
  double initial_step(double direction, double h_max);
  void stages(double h);
  double error_norm(double h) const;

  Rhs rhs_;
  std::size_t dim_;
  OdeTolerance tol_;
  StepCheck check_;
  double h_max_ = 0.0;

  double t_ = 0.0;
  double t_prev_ = 0.0;
  double h_ = 0.0;
  double h_last_ = 0.0;
  double fac_old_ = 1e-4;
  bool last_rejected_ = false;
  std::size_t evaluations_ = 0;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;

  std::vector<double> y_, y_prev_, y_new_, work_, increment_;
  // Stage derivatives of the last attempted step; s1_ is f(t, y).
  std::vector<double> s1_, s2_, s3_, s4_, s5_, s6_, s7_, s8_, s9_, s10_, s11_, s12_;
  // Stages of the last accepted step retained for dense output.
  std::vector<double> a1_, a6_, a7_, a8_, a9_, a10_, a11_, a12_;
};

struct RkStepResult {
  double t = 0.0;
  std::vector<double> state;
  DenseStep interpolant;
  double dt_next = 0.0;
};

/// One accepted adaptive step from (t, state) with a suggested size.
RkStepResult rk_step_dense(const Dop853::Rhs& f, std::span<const double> state, double t,
                           double dt_suggest, OdeTolerance tol = {});

/// First root of event(t, y(t)) inside the dense step (or inside
/// [t_lo, t_hi] when given), found by bisection on the interpolant after a
/// scan of `scan_points` sub-intervals. The returned time is within
/// time_tol of the root.
std::optional<double> locate_event(
    const DenseStep& step,
    const std::function<double(double, std::span<const double>)>& event,
    double time_tol = 1e-12, int scan_points = 1,
    std::optional<std::pair<double, double>> range = std::nullopt);

}  // namespace rflight
