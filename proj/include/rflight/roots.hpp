#pragma once

#include <functional>
#include <optional>

namespace rflight {

struct RootResult {
  double root = 0.0;
  int iterations = 0;
};

/// Bisection on a sign-changing bracket [a, b], then Newton polish when a
/// derivative is supplied. Newton iterates that leave the bracket or do
/// not shrink the residual are discarded. Throws DomainError if f(a) and
/// f(b) have the same sign.
RootResult find_root_bracketed(const std::function<double(double)>& f, double a,
                               double b, double abs_tol = 1e-12,
                               const std::function<double(double)>& df = {});

}  // namespace rflight
