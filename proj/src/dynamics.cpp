#include "rflight/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rflight/errors.hpp"

namespace rflight {

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double angular_momentum(std::span<const double> x, std::span<const double> v) {
  // Sum of squared 2-form components; avoids the cancellation in
  // |x|^2 |v|^2 - (x.v)^2 for nearly radial motion.
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double w = x[i] * v[j] - x[j] * v[i];
      s += w * w;
    }
  }
  return std::sqrt(s);
}

double instantaneous_energy(const ModelConfig& config, std::span<const double> x,
                            std::span<const double> v) {
  const double v2 = dot(v, v);
  return std::sqrt(config.n) * 0.5 * config.mass * v2 + config.U(norm(x));
}

PhaseState make_phase_state(std::vector<double> x, std::vector<double> v,
                            const ModelConfig& config) {
  PhaseState s;
  s.x = std::move(x);
  s.v = std::move(v);
  s.r = norm(s.x);
  s.L = angular_momentum(s.x, s.v);
  s.energy = instantaneous_energy(config, s.x, s.v);
  return s;
}

PhaseState launch_state(std::span<const double> x, std::span<const double> u,
                        const ModelConfig& config) {
  if (static_cast<int>(x.size()) != config.dim || static_cast<int>(u.size()) != config.dim) {
    throw DomainError("launch_state: dimension mismatch");
  }
  if (std::abs(norm(u) - 1.0) > 1e-12) throw DomainError("launch_state: direction not unit");
  const double r = norm(x);
  const bool at_origin = r == 0.0 && config.domain.lower == 0.0 &&
                         !config.potential.singular_at_origin;
  if (!config.domain.contains_open(r) && !at_origin) {
    throw DomainError("launch_state: |x| outside the open domain");
  }
  const double vn = scaled_speed(config, r);
  std::vector<double> v(u.begin(), u.end());
  for (double& c : v) c *= vn;
  return make_phase_state(std::vector<double>(x.begin(), x.end()), std::move(v), config);
}

std::vector<double> PathSegment::eval(double t) const {
  if (pieces.empty()) throw DomainError("PathSegment::eval: no dense output stored");
  if (t < pieces.front().t0 || t > pieces.back().t1) {
    throw DomainError("PathSegment::eval: time outside the segment");
  }
  auto it = std::upper_bound(pieces.begin(), pieces.end(), t,
                             [](double tv, const SegmentPiece& p) { return tv < p.t1; });
  if (it == pieces.end()) it = std::prev(pieces.end());
  std::vector<double> y(it->dense.dim());
  it->dense.eval(t, y);
  return y;
}

PhaseState PathSegment::state_at(double t, const ModelConfig& config) const {
  const std::vector<double> y = eval(t);
  const auto d = static_cast<std::size_t>(dim);
  return make_phase_state(std::vector<double>(y.begin(), y.begin() + d),
                          std::vector<double>(y.begin() + d, y.begin() + 2 * d), config);
}

namespace {

// Dense step that interpolates linearly between y0 and y1 over [t0, t0 + h].
DenseStep linear_piece(double t0, double h, std::span<const double> y0,
                       std::span<const double> y1) {
  DenseStep step(t0, h, y0.size());
  auto c0 = step.coefficients(0);
  auto c1 = step.coefficients(1);
  for (std::size_t i = 0; i < y0.size(); ++i) {
    c0[i] = y0[i];
    c1[i] = y1[i] - y0[i];
  }
  return step;
}

double radius_of(std::span<const double> y, std::size_t d) { return norm(y.first(d)); }

}  // namespace

FlightResult fly(const PhaseState& start, const ModelConfig& config,
                 const FlightOptions& options) {
  const auto d = static_cast<std::size_t>(config.dim);
  const std::size_t dim = 2 * d + 1;
  const double sqn = std::sqrt(config.n);
  const double inv_force = 1.0 / (sqn * config.mass);
  const Numerics& num = config.numerics;
  const double eps = num.origin_eps * config.length_scale();
  const double n_quarter = std::pow(config.n, 0.25);

  auto rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    double r2 = 0.0, v2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      r2 += y[i] * y[i];
      v2 += y[d + i] * y[d + i];
    }
    const double r = std::sqrt(r2);
    const double coef = r > 0.0 ? -config.dU(r) * inv_force / r : 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      dy[i] = y[d + i];
      dy[d + i] = coef * y[i];
    }
    dy[2 * d] = sqn * config.g(r) * std::sqrt(v2);
  };

  const double e_ref = config.energy;
  const double e_scale = std::abs(e_ref) > 0.0 ? std::abs(e_ref) : 1.0;
  const double l0 = start.L;
  const double l_scale =
      std::max(start.r, 1e-3 * config.length_scale()) * std::max(norm(start.v), 1e-300);
  const double step_tol = 10.0 * num.rel_tol;

  Dop853 stepper(rhs, dim, {num.abs_tol, num.rel_tol});
  stepper.set_step_check([&](std::span<const double> y_old, std::span<const double> y_new) {
    const auto x0 = y_old.first(d), v0 = y_old.subspan(d, d);
    const auto x1 = y_new.first(d), v1 = y_new.subspan(d, d);
    const double u0 = config.U(norm(x0)), u1 = config.U(norm(x1));
    const double e0 = sqn * 0.5 * config.mass * dot(v0, v0) + u0;
    const double e1 = sqn * 0.5 * config.mass * dot(v1, v1) + u1;
    if (!std::isfinite(e1)) return false;
    const double scale = std::max({e_scale, std::abs(u0), std::abs(u1)});
    if (std::abs(e1 - e0) > step_tol * scale) return false;
    const double la = angular_momentum(x0, v0), lb = angular_momentum(x1, v1);
    return std::abs(lb - la) <= step_tol * std::max(l_scale, la);
  });

  FlightResult result;
  std::vector<double> y(dim);
  std::copy(start.x.begin(), start.x.end(), y.begin());
  std::copy(start.v.begin(), start.v.end(), y.begin() + d);
  y[2 * d] = 0.0;

  auto measure = [&](std::span<const double> yy) {
    const auto x = yy.first(d), v = yy.subspan(d, d);
    const double e = instantaneous_energy(config, x, v);
    result.max_energy_drift = std::max(result.max_energy_drift, std::abs(e - e_ref) / e_scale);
    result.max_L_drift =
        std::max(result.max_L_drift, std::abs(angular_momentum(x, v) - l0) / l_scale);
  };
  auto record = [&](double t, std::span<const double> yy) {
    if (!options.record_samples) return;
    result.segment.t.push_back(t);
    result.segment.states.push_back(
        make_phase_state(std::vector<double>(yy.begin(), yy.begin() + d),
                         std::vector<double>(yy.begin() + d, yy.begin() + 2 * d), config));
  };
  result.segment.dim = config.dim;

  const double target = options.hazard_target;
  const bool has_target = std::isfinite(target);
  const double t_stop = std::min(options.t_end, num.t_max);
  const bool capped = num.t_max < options.t_end;
  bool band_open = options.band.has_value();
  double band_l = 0.0, band_u = 0.0;
  if (band_open) {
    band_l = options.band->first;
    band_u = options.band->second;
    if (!(start.r > band_l && start.r < band_u)) {
      result.band_exit_time = 0.0;
      band_open = false;
    }
  }
  auto band_gap = [&](double r) { return std::min(r - band_l, band_u - r); };

  measure(y);
  record(0.0, y);
  stepper.reset(0.0, y);
  std::vector<double> ye(dim);

  auto finish = [&](double t, std::span<const double> yy, bool hit) {
    result.duration = t;
    result.hazard = yy[2 * d];
    result.reached_target = hit;
    measure(yy);
    record(t, yy);
    result.final_state =
        make_phase_state(std::vector<double>(yy.begin(), yy.begin() + d),
                         std::vector<double>(yy.begin() + d, yy.begin() + 2 * d), config);
    return result;
  };

  for (;;) {
    const bool done = stepper.step(t_stop);
    ++result.steps;
    const double t0 = stepper.t_prev();
    const double t1 = stepper.t();
    const auto y0 = stepper.y_prev();
    const auto y1 = stepper.y();
    for (double c : y1) {
      if (!std::isfinite(c)) throw NumericError("fly: non-finite state");
    }
    const double r0 = radius_of(y0, d);
    const double r1 = radius_of(y1, d);
    double step_len = 0.0;
    for (std::size_t i = 0; i < d; ++i) step_len += (y1[i] - y0[i]) * (y1[i] - y0[i]);
    step_len = std::sqrt(step_len);

    const bool hazard_hit = has_target && y1[2 * d] >= target;
    const double speed1 = norm(y1.subspan(d, d));
    const double impact = speed1 > 0.0 ? angular_momentum(y1.first(d), y1.subspan(d, d)) / speed1
                                       : r1;
    const bool origin_watch =
        r0 >= eps && impact < 10.0 * eps && std::min(r0, r1) <= step_len + eps;
    const bool band_watch =
        band_open && (std::min(band_gap(r0), band_gap(r1)) <= step_len || band_gap(r1) <= 0.0);

    std::optional<DenseStep> dense;
    if (options.keep_dense || hazard_hit || origin_watch || band_watch) dense = stepper.dense();

    std::optional<double> t_origin;
    if (origin_watch) {
      // Find the closest approach on the interpolant, then the first time r < eps.
      constexpr int K = 64;
      double best_t = t0, best_r = r0;
      for (int k = 1; k <= K; ++k) {
        const double tk = t0 + (t1 - t0) * k / K;
        dense->eval(tk, ye);
        const double rk = radius_of(ye, d);
        if (rk < best_r) {
          best_r = rk;
          best_t = tk;
        }
      }
      double a = std::max(t0, best_t - (t1 - t0) / K), b = std::min(t1, best_t + (t1 - t0) / K);
      auto r_at = [&](double t) {
        dense->eval(t, ye);
        return radius_of(ye, d);
      };
      for (int it = 0; it < 100 && b - a > 1e-15 * std::max(1.0, t1); ++it) {
        const double m1 = a + (b - a) * 0.381966011250105;
        const double m2 = b - (b - a) * 0.381966011250105;
        if (r_at(m1) < r_at(m2)) {
          b = m2;
        } else {
          a = m1;
        }
      }
      const double t_min = 0.5 * (a + b);
      if (r_at(t_min) < eps) {
        t_origin = locate_event(*dense,
                                [&](double, std::span<const double> yy) {
                                  return radius_of(yy, d) - eps;
                                },
                                1e-15 * std::max(1.0, t1), 1, std::make_pair(t0, t_min));
        if (!t_origin) t_origin = t_min;
      }
    }

    std::optional<double> t_hazard;
    if (hazard_hit) {
      t_hazard = locate_event(
          *dense, [&](double, std::span<const double> yy) { return yy[2 * d] - target; }, 1e-12,
          1);
      if (!t_hazard) t_hazard = t1;
    }

    const double t_cut = t_origin ? *t_origin : (t_hazard ? *t_hazard : t1);
    if (band_open && band_watch) {
      const std::optional<double> tb = locate_event(
          *dense,
          [&](double, std::span<const double> yy) { return band_gap(radius_of(yy, d)); }, 1e-12,
          16, std::make_pair(t0, t_cut));
      if (tb && *tb <= t_cut) {
        result.band_exit_time = *tb;
        band_open = false;
      }
    }

    if (t_origin && (!t_hazard || *t_origin < *t_hazard)) {
      dense->eval(*t_origin, ye);
      const auto xe = std::span<const double>(ye).first(d);
      const auto ve = std::span<const double>(ye).subspan(d, d);
      const double ve_norm = norm(ve);
      if (ve_norm * n_quarter > num.v_cap) {
        throw SingularInfallError("fly: infall through the origin at speed " +
                                  std::to_string(ve_norm * n_quarter) + " exceeds v_cap");
      }
      const double re = radius_of(ye, d);
      const double gap = ve_norm > 0.0 ? 2.0 * re / ve_norm : 0.0;
      const double rate = sqn * config.g(re) * ve_norm;
      std::vector<double> yj(ye);
      for (std::size_t i = 0; i < d; ++i) yj[i] = -ye[i];
      yj[2 * d] = ye[2 * d] + rate * gap;
      ++result.origin_crossings;
      if (options.keep_dense) {
        result.segment.pieces.push_back({t0, *t_origin, *dense});
        if (gap > 0.0) {
          result.segment.pieces.push_back(
              {*t_origin, *t_origin + gap, linear_piece(*t_origin, gap, ye, yj)});
        }
      }
      record(*t_origin, ye);
      if (has_target && yj[2 * d] >= target) {
        const double frac = rate > 0.0 ? (target - ye[2 * d]) / (rate * gap) : 0.0;
        std::vector<double> yf(dim);
        for (std::size_t i = 0; i < dim; ++i) yf[i] = ye[i] + frac * (yj[i] - ye[i]);
        yf[2 * d] = target;
        return finish(*t_origin + frac * gap, yf, true);
      }
      const double t_resume = *t_origin + gap;
      if (t_resume >= t_stop) {
        if (has_target && capped) {
          throw SlowRegionError("fly: hazard target not reached within t_max");
        }
        return finish(t_stop, yj, false);
      }
      stepper.reset(t_resume, yj, stepper.suggested_step());
      measure(yj);
      record(t_resume, yj);
      continue;
    }

    if (t_hazard) {
      if (options.keep_dense) result.segment.pieces.push_back({t0, *t_hazard, *dense});
      dense->eval(*t_hazard, ye);
      return finish(*t_hazard, ye, true);
    }

    if (options.keep_dense) result.segment.pieces.push_back({t0, t1, *dense});
    if (done) {
      if (has_target && capped) {
        throw SlowRegionError("fly: hazard target not reached within t_max=" +
                              std::to_string(num.t_max));
      }
      return finish(t1, y1, false);
    }
    measure(y1);
    record(t1, y1);
  }
}

PathSegment integrate(const PhaseState& state, double t_end, const ModelConfig& config) {
  if (!(t_end > 0.0)) throw DomainError("integrate: t_end must be positive");
  FlightOptions options;
  options.t_end = t_end;
  options.record_samples = true;
  options.keep_dense = true;
  return fly(state, config, options).segment;
}

std::vector<PolarSample> polar_reduce(const PathSegment& segment, const ModelConfig& config) {
  std::vector<PolarSample> out;
  if (segment.states.empty()) return out;
  const double eps = config.numerics.origin_eps * config.length_scale();
  const PhaseState& s0 = segment.states.front();
  const std::size_t d = s0.x.size();
  // Orthonormal basis of the invariant plane.
  std::vector<double> e1(d, 0.0), e2(d, 0.0);
  if (s0.r > 0.0) {
    for (std::size_t i = 0; i < d; ++i) e1[i] = s0.x[i] / s0.r;
    const double p = dot(s0.v, e1);
    for (std::size_t i = 0; i < d; ++i) e2[i] = s0.v[i] - p * e1[i];
    const double n2 = norm(e2);
    if (n2 > 1e-14 * norm(s0.v)) {
      for (double& c : e2) c /= n2;
    } else {
      std::fill(e2.begin(), e2.end(), 0.0);
    }
  }
  const double l0 = s0.L;
  double prev_alpha = 0.0;
  for (std::size_t k = 0; k < segment.states.size(); ++k) {
    const PhaseState& s = segment.states[k];
    PolarSample p;
    p.t = segment.t[k];
    p.r = s.r;
    if (s.r < eps) {
      p.flagged = true;
      out.push_back(p);
      continue;
    }
    p.r_dot = dot(s.x, s.v) / s.r;
    p.alpha_dot = s.L / (s.r * s.r);
    double a = std::atan2(dot(s.x, e2), dot(s.x, e1));
    if (k > 0) {
      while (a - prev_alpha > std::numbers::pi) a -= 2.0 * std::numbers::pi;
      while (a - prev_alpha < -std::numbers::pi) a += 2.0 * std::numbers::pi;
    }
    prev_alpha = a;
    p.alpha = a;
    const double v2 = dot(s.v, s.v);
    p.r_ddot_residual =
        std::abs((v2 - p.r_dot * p.r_dot) / s.r - l0 * l0 / (s.r * s.r * s.r));
    out.push_back(p);
  }
  return out;
}

double psi(const ModelConfig& config, double r, double r0, double theta) {
  const double v0 = speed(config, r0);
  const double s = std::sin(theta);
  return -config.dU(r) / config.mass + v0 * v0 * r0 * r0 * s * s / (r * r * r);
}

double taylor_residual(const PathSegment& segment, double t, const ModelConfig& config) {
  if (segment.states.empty()) throw DomainError("taylor_residual: empty segment");
  const PhaseState& s0 = segment.states.front();
  const double r0 = s0.r;
  const double cos_theta = r0 > 0.0 ? dot(s0.x, s0.v) / (r0 * norm(s0.v)) : 1.0;
  const double theta = std::acos(std::clamp(cos_theta, -1.0, 1.0));
  const auto d = s0.x.size();
  auto r_at = [&](double tau) {
    const std::vector<double> y = segment.eval(tau);
    return norm(std::span<const double>(y).first(d));
  };
  const double rt = r_at(t);
  const double vn0 = scaled_speed(config, r0);
  const double base = r0 + vn0 * cos_theta * t;
  const double sqn = std::sqrt(config.n);
  double best = kInfinity;
  constexpr int K = 200;
  for (int k = 0; k <= K; ++k) {
    const double tau = t * k / K;
    const double res = rt - (base + 0.5 * psi(config, r_at(tau), r0, theta) / sqn * t * t);
    best = std::min(best, std::abs(res));
  }
  return best;
}

}  // namespace rflight
