#include "rflight/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "rflight/errors.hpp"

namespace rflight {

namespace {

struct SimpsonState {
  const ScalarFunction& f;
  std::size_t subdivisions = 0;
  std::size_t max_subdivisions = 200000;
  bool exhausted = false;
};

double simpson_recurse(SimpsonState& st, double a, double b, double fa, double fm,
                       double fb, double whole, double tol, int depth, double& err) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = st.f(lm);
  const double frm = st.f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  ++st.subdivisions;
  if (depth <= 0 || st.subdivisions > st.max_subdivisions || !std::isfinite(delta)) {
    st.exhausted = true;
    err += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  if (std::abs(delta) <= 15.0 * tol) {
    err += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err) +
         simpson_recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err);
}

}  // namespace

QuadratureResult adaptive_simpson(const ScalarFunction& f, double a, double b,
                                  double abs_tol, int max_depth) {
  QuadratureResult result;
  if (a == b) {
    result.converged = true;
    return result;
  }
  SimpsonState st{f};
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double err = 0.0;
  result.value = simpson_recurse(st, a, b, fa, fm, fb, whole, abs_tol, max_depth, err);
  result.error_estimate = err;
  result.subdivisions = st.subdivisions;
  result.converged = !st.exhausted && std::isfinite(result.value) && err <= abs_tol;
  return result;
}

QuadratureResult tanh_sinh(const ScalarFunction& f, double a, double b,
                           double abs_tol, int max_levels) {
  QuadratureResult result;
  if (a == b) {
    result.converged = true;
    return result;
  }
  const double sign = b > a ? 1.0 : -1.0;
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double width = hi - lo;
  constexpr double half_pi = 0.5 * std::numbers::pi;
  constexpr double t_max = 6.5;

  // Node at parameter t: x = lo + width / (1 + e^{-2u}), u = (pi/2) sinh t.
  auto node = [&](double t) -> double {
    const double u = half_pi * std::sinh(t);
    const double cosh_u = std::cosh(u);
    const double weight = half_pi * std::cosh(t) / (cosh_u * cosh_u) * 0.5 * width;
    if (!(weight > 0.0) || !std::isfinite(weight)) return 0.0;
    double x;
    if (u < 0.0) {
      const double dist = width / (1.0 + std::exp(-2.0 * u));
      if (!(dist > 0.0)) return 0.0;
      x = lo + dist;
      if (x == lo) return 0.0;
    } else {
      const double dist = width / (1.0 + std::exp(2.0 * u));
      if (!(dist > 0.0)) return 0.0;
      x = hi - dist;
      if (x == hi) return 0.0;
    }
    const double fx = f(x);
    if (!std::isfinite(fx)) return 0.0;
    return weight * fx;
  };

  double h = 1.0;
  double sum = node(0.0);
  for (int k = 1; k * h <= t_max; ++k) sum += node(k * h) + node(-k * h);
  double estimate = h * sum;
  std::size_t evaluations = 1 + 2 * static_cast<std::size_t>(t_max / h);
  for (int level = 1; level <= max_levels; ++level) {
    h *= 0.5;
    double fresh = 0.0;
    for (int k = 1; k * h <= t_max; k += 2) fresh += node(k * h) + node(-k * h);
    evaluations += 2 * static_cast<std::size_t>(t_max / h / 2);
    sum += fresh;
    const double next = h * sum;
    const double delta = std::abs(next - estimate);
    estimate = next;
    result.error_estimate = delta;
    if (level >= 3 && delta <= abs_tol) {
      result.converged = true;
      break;
    }
  }
  result.value = sign * estimate;
  result.subdivisions = evaluations;
  result.converged = result.converged && std::isfinite(result.value);
  return result;
}

QuadratureResult integrate_adaptive(const ScalarFunction& f, double a, double b,
                                    double abs_tol) {
  auto finite_at = [&](double x) {
    try {
      return std::isfinite(f(x));
    } catch (const std::exception&) {
      return false;
    }
  };
  if (finite_at(a) && finite_at(b)) {
    QuadratureResult simpson = adaptive_simpson(f, a, b, abs_tol);
    if (simpson.converged) return simpson;
  }
  QuadratureResult ds = tanh_sinh(f, a, b, abs_tol);
  if (!ds.converged) {
    throw NumericError("integrate_adaptive: no convergence on [" + std::to_string(a) +
                       ", " + std::to_string(b) + "]");
  }
  return ds;
}

GaussRule gauss_hermite_normal(int order) {
  if (order < 1) throw DomainError("gauss_hermite_normal: order must be positive");
  // Roots of the physicists' Hermite polynomial by Newton iteration on the
  // normalized recurrence, then rescaled to the standard normal weight.
  const int n = order;
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  std::vector<double> x(n), w(n);
  double z = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = std::numbers::sqrt2 * x[n - 1 - i];
    rule.weights[i] = w[n - 1 - i] / std::sqrt(std::numbers::pi);
  }
  return rule;
}

}  // namespace rflight
