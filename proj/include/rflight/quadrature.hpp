#pragma once

#include <cstddef>
#include <functional>

namespace rflight {

using ScalarFunction = std::function<double(double)>;

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t subdivisions = 0;
  bool converged = false;
};

/// Adaptive Simpson with Richardson correction. Evaluates f at a and b.
QuadratureResult adaptive_simpson(const ScalarFunction& f, double a, double b,
                                  double abs_tol, int max_depth = 50);

/// Double-exponential (tanh-sinh) rule. Never evaluates the endpoints and
/// places nodes by their distance to the nearer endpoint, so integrable
/// endpoint singularities are resolved.
QuadratureResult tanh_sinh(const ScalarFunction& f, double a, double b,
                           double abs_tol, int max_levels = 12);

/// Simpson when f is finite at both endpoints and Simpson converges,
/// tanh-sinh otherwise. Throws NumericError when neither converges.
QuadratureResult integrate_adaptive(const ScalarFunction& f, double a, double b,
                                    double abs_tol = 1e-10);

}  // namespace rflight

#include <vector>

namespace rflight {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for expectations under N(0, 1):
/// E f(Z) ~ sum w_i f(x_i), exact for polynomials of degree < 2 * order.
GaussRule gauss_hermite_normal(int order);

}  // namespace rflight
