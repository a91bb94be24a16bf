#include "rflight/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <string>

#include "rflight/dynamics.hpp"
#include "rflight/errors.hpp"
#include "rflight/quadrature.hpp"

namespace rflight {

double DiffusionCoefficients::radial_drift(double r) const {
  const int d = config_.dim;
  const double g = config_.g(r);
  const double v = speed(config_, r);
  const double mv2 = config_.mass * v * v;
  return -(1.0 / (d * g * g)) * ((d - 1) * config_.dU(r) / mv2 + config_.dg(r) / g);
}

std::vector<double> DiffusionCoefficients::drift(std::span<const double> x) const {
  const double r = norm(x);
  std::vector<double> b(x.size(), 0.0);
  if (r == 0.0) return b;
  const double br = radial_drift(r);
  for (std::size_t i = 0; i < x.size(); ++i) b[i] = br * x[i] / r;
  return b;
}

double DiffusionCoefficients::sigma2(double r) const {
  const double g = config_.g(r);
  return config_.covariance_constant() / (g * g);
}

double DiffusionCoefficients::clock_rate(double r) const {
  return config_.g(r) * speed(config_, r);
}

double DiffusionCoefficients::kappa() const {
  return config_.radial == RadialConvention::Ito ? config_.dim - 1.0 : 1.0;
}

double DiffusionCoefficients::radial_process_drift(double r) const {
  return radial_drift(r) + 0.5 * sigma2(r) * kappa() / r;
}

namespace {

// Drift, variance and clock density 1/lambda of one process at a state.
struct LocalCoefficients {
  std::vector<double> drift;
  double sigma2 = 0.0;
  double inv_clock = 0.0;
};

using CoefficientFn = std::function<LocalCoefficients(std::span<const double>)>;
using RadiusFn = std::function<double(std::span<const double>)>;

void require_finite(const LocalCoefficients& c) {
  bool ok = std::isfinite(c.sigma2) && c.sigma2 >= 0.0 && std::isfinite(c.inv_clock);
  for (double b : c.drift) ok = ok && std::isfinite(b);
  if (!ok) throw NumericError("diffusion: non-finite coefficients");
}

LocalCoefficients evaluate(const CoefficientFn& fn, std::span<const double> x) {
  LocalCoefficients c;
  try {
    c = fn(x);
  } catch (const DomainError& e) {
    throw NumericError(std::string("diffusion: state left the domain: ") + e.what());
  }
  require_finite(c);
  return c;
}

// reflect_at_zero: scalar radial state; an Euler step past the origin is
// mirrored back, as the exact process does not reach it.
DiffusionPath simulate_em(std::vector<double> x, const CoefficientFn& coeffs,
                          const RadiusFn& radius, const DiffusionOptions& opt, RngStream& rng,
                          bool reflect_at_zero = false) {
  if (!(opt.dt > 0.0)) throw DomainError("diffusion: dt must be positive");
  if (!std::isfinite(opt.horizon) && !opt.band && !opt.clock_horizon) {
    throw DomainError("diffusion: unbounded run (no horizon, band or clock horizon)");
  }
  if (opt.band) {
    const double r0 = radius(x);
    if (!(opt.band->first < r0 && r0 < opt.band->second)) {
      throw DomainError("diffusion: start outside the band");
    }
  }
  const std::size_t dim = x.size();
  DiffusionPath path;
  path.state_dim = static_cast<int>(dim);
  double t = 0.0;
  double A = 0.0;
  auto record = [&] {
    if (!opt.record_path) return;
    path.t.push_back(t);
    path.states.push_back(x);
    path.A.push_back(A);
  };
  record();
  LocalCoefficients c = evaluate(coeffs, x);
  std::vector<double> xi(dim), next(dim);
  const double time_tol = 1e-9 * opt.dt;
  if (opt.snapshot_time && *opt.snapshot_time <= 0.0) {
    path.snapshot = x;
    path.snapshot_A = 0.0;
  }

  while (t < opt.horizon) {
    if (opt.clock_horizon && A >= *opt.clock_horizon) break;
    double h = std::min(opt.dt, opt.horizon - t);
    bool at_snapshot = false;
    if (opt.snapshot_time && !path.snapshot && t + h >= *opt.snapshot_time - time_tol) {
      h = *opt.snapshot_time - t;
      at_snapshot = true;
    }
    const bool at_horizon = !at_snapshot && h < opt.dt;
    rng.fill_normal(xi);
    const double sd = std::sqrt(c.sigma2 * h);
    for (std::size_t i = 0; i < dim; ++i) next[i] = x[i] + c.drift[i] * h + sd * xi[i];
    if (reflect_at_zero && next[0] < 0.0) next[0] = -next[0];
    ++path.steps;

    if (opt.band) {
      const double r_old = radius(x);
      const double r_new = radius(next);
      if (r_new <= opt.band->first || r_new >= opt.band->second) {
        path.exit_side = r_new <= opt.band->first ? -1 : 1;
        const double edge = path.exit_side < 0 ? opt.band->first : opt.band->second;
        const double theta = std::clamp((r_old - edge) / (r_old - r_new), 0.0, 1.0);
        for (std::size_t i = 0; i < dim; ++i) next[i] = x[i] + theta * (next[i] - x[i]);
        const double r_cut = radius(next);
        if (r_cut > 0.0) {
          for (double& v : next) v *= edge / r_cut;
        }
        const LocalCoefficients ce = evaluate(coeffs, next);
        A += 0.5 * (c.inv_clock + ce.inv_clock) * theta * h;
        t += theta * h;
        x = next;
        path.exited = true;
        path.exit_time = t;
        record();
        break;
      }
    }

    const LocalCoefficients cn = evaluate(coeffs, next);
    A += 0.5 * (c.inv_clock + cn.inv_clock) * h;
    t = at_snapshot ? *opt.snapshot_time : (at_horizon ? opt.horizon : t + h);
    x = next;
    c = cn;
    record();
    if (at_snapshot) {
      path.snapshot = x;
      path.snapshot_A = A;
    }
  }
  if (opt.snapshot_time && !path.snapshot && *opt.snapshot_time >= t) {
    path.snapshot = x;
    path.snapshot_A = A;
  }
  path.final_state = x;
  path.final_time = t;
  path.final_A = A;
  return path;
}

}  // namespace

DiffusionPath simulate_G(std::span<const double> x0, const ModelConfig& config,
                         const DiffusionOptions& options, RngStream& rng) {
  if (static_cast<int>(x0.size()) != config.dim) {
    throw DomainError("simulate_G: start point dimension mismatch");
  }
  const DiffusionCoefficients coeffs(config);
  auto fn = [&](std::span<const double> x) {
    const double r = norm(x);
    LocalCoefficients c;
    c.drift = coeffs.drift(x);
    c.sigma2 = coeffs.sigma2(r);
    c.inv_clock = 1.0 / coeffs.clock_rate(r);
    return c;
  };
  auto radius = [](std::span<const double> x) { return norm(x); };
  return simulate_em(std::vector<double>(x0.begin(), x0.end()), fn, radius, options, rng);
}

DiffusionPath simulate_Gr(double r0, const ModelConfig& config, const DiffusionOptions& options,
                          RngStream& rng) {
  const DiffusionCoefficients coeffs(config);
  auto fn = [&](std::span<const double> x) {
    const double r = x[0];
    if (!(r > 0.0)) throw NumericError("simulate_Gr: radius reached zero");
    LocalCoefficients c;
    c.drift = {coeffs.radial_process_drift(r)};
    c.sigma2 = coeffs.sigma2(r);
    c.inv_clock = 1.0 / coeffs.clock_rate(r);
    return c;
  };
  auto radius = [](std::span<const double> x) { return x[0]; };
  return simulate_em({r0}, fn, radius, options, rng, true);
}

DiffusionPath simulate_natural(std::span<const double> x0, const ModelConfig& config,
                               const DiffusionOptions& options, RngStream& rng) {
  if (static_cast<int>(x0.size()) != config.dim) {
    throw DomainError("simulate_natural: start point dimension mismatch");
  }
  const DiffusionCoefficients coeffs(config);
  auto fn = [&](std::span<const double> x) {
    const double r = norm(x);
    const double lambda = coeffs.clock_rate(r);
    LocalCoefficients c;
    c.drift = coeffs.drift(x);
    for (double& b : c.drift) b *= lambda;
    c.sigma2 = lambda * coeffs.sigma2(r);
    c.inv_clock = 1.0;
    return c;
  };
  auto radius = [](std::span<const double> x) { return norm(x); };
  return simulate_em(std::vector<double>(x0.begin(), x0.end()), fn, radius, options, rng);
}

double time_change_Omega(const DiffusionPath& path, double t) {
  const auto& A = path.A;
  if (A.empty() || !(t >= A.front()) || t > A.back()) {
    throw DomainError("time_change_Omega: t outside the recorded clock range");
  }
  auto it = std::upper_bound(A.begin(), A.end(), t);
  if (it == A.end()) return path.t.back();
  const std::size_t i = static_cast<std::size_t>(it - A.begin());
  if (i == 0) return path.t.front();
  const double w = (t - A[i - 1]) / (A[i] - A[i - 1]);
  return path.t[i - 1] + w * (path.t[i] - path.t[i - 1]);
}

std::vector<double> path_state_at(const DiffusionPath& path, double s) {
  const auto& ts = path.t;
  if (ts.empty() || s < ts.front() || s > ts.back()) {
    throw DomainError("path_state_at: time outside the recorded path");
  }
  auto it = std::upper_bound(ts.begin(), ts.end(), s);
  if (it == ts.end()) return path.states.back();
  const std::size_t i = static_cast<std::size_t>(it - ts.begin());
  if (i == 0) return path.states.front();
  const double w = (s - ts[i - 1]) / (ts[i] - ts[i - 1]);
  std::vector<double> out(path.states[i].size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = path.states[i - 1][k] + w * (path.states[i][k] - path.states[i - 1][k]);
  }
  return out;
}

void write_path_csv(const DiffusionPath& path, std::ostream& out) {
  out << "t";
  if (path.state_dim == 1) {
    out << ",r";
  } else {
    for (int i = 0; i < path.state_dim; ++i) out << ",x" << i + 1;
  }
  out << ",A\n" << std::setprecision(17);
  for (std::size_t k = 0; k < path.t.size(); ++k) {
    out << path.t[k];
    for (double v : path.states[k]) out << "," << v;
    out << "," << path.A[k] << "\n";
  }
}

TestFunction squared_norm_function() {
  TestFunction f;
  f.f = [](std::span<const double> x) { return dot(x, x); };
  f.gradient = [](std::span<const double> x) {
    std::vector<double> g(x.begin(), x.end());
    for (double& v : g) v *= 2.0;
    return g;
  };
  f.laplacian = [](std::span<const double> x) { return 2.0 * static_cast<double>(x.size()); };
  return f;
}

TestFunction linear_function(std::vector<double> c) {
  TestFunction f;
  f.f = [c](std::span<const double> x) { return dot(c, x); };
  f.gradient = [c](std::span<const double>) { return c; };
  f.laplacian = [](std::span<const double>) { return 0.0; };
  return f;
}

double apply_generator(const TestFunction& f, std::span<const double> x,
                       const ModelConfig& config) {
  const DiffusionCoefficients coeffs(config);
  const auto b = coeffs.drift(x);
  const auto grad = f.gradient(x);
  return dot(b, grad) + 0.5 * coeffs.sigma2(norm(x)) * f.laplacian(x);
}

GeneratorResidual generator_residual(const TestFunction& f, std::span<const double> x,
                                     const ModelConfig& config, std::span<const double> dts,
                                     ResidualMode mode, std::size_t samples,
                                     const RngStream& rng, int gh_order) {
  const DiffusionCoefficients coeffs(config);
  const auto b = coeffs.drift(x);
  const double s2 = coeffs.sigma2(norm(x));
  const std::size_t d = x.size();
  const double f0 = f.f(x);
  GeneratorResidual out;
  out.generator = apply_generator(f, x, config);
  std::vector<double> y(d), xi(d);
  GaussRule rule;
  if (mode == ResidualMode::GaussHermite) rule = gauss_hermite_normal(gh_order);

  for (double dt : dts) {
    if (!(dt > 0.0)) throw DomainError("generator_residual: dt must be positive");
    const double sd = std::sqrt(s2 * dt);
    double mean = 0.0, se = 0.0;
    if (mode == ResidualMode::MonteCarlo) {
      if (samples < 2) throw DomainError("generator_residual: need two samples");
      double sum = 0.0, sum2 = 0.0;
      for (std::size_t k = 0; k < samples; ++k) {
        RngStream s = rng.substream(k);
        s.fill_normal(xi);
        for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + b[i] * dt + sd * xi[i];
        const double v = (f.f(y) - f0) / dt;
        sum += v;
        sum2 += v * v;
      }
      const double c = static_cast<double>(samples);
      mean = sum / c;
      se = std::sqrt(std::max(0.0, (sum2 - c * mean * mean) / (c - 1.0)) / c);
    } else {
      const std::size_t q = rule.nodes.size();
      std::size_t total = 1;
      for (std::size_t i = 0; i < d; ++i) total *= q;
      double acc = 0.0;
      for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        double w = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
          const std::size_t j = rem % q;
          rem /= q;
          w *= rule.weights[j];
          y[i] = x[i] + b[i] * dt + sd * rule.nodes[j];
        }
        acc += w * (f.f(y) - f0);
      }
      mean = acc / dt;
    }
    out.dt.push_back(dt);
    out.estimate.push_back(mean);
    out.se.push_back(se);
    out.residual.push_back(mean - out.generator);
  }
  return out;
}

}  // namespace rflight
