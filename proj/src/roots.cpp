#include "rflight/roots.hpp"

#include <cmath>

#include "rflight/errors.hpp"

namespace rflight {

RootResult find_root_bracketed(const std::function<double(double)>& f, double a,
                               double b, double abs_tol,
                               const std::function<double(double)>& df) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return {a, 0};
  if (fb == 0.0) return {b, 0};
  if (std::signbit(fa) == std::signbit(fb)) {
    throw DomainError("find_root_bracketed: no sign change on bracket");
  }
  RootResult result;
  while (std::abs(b - a) > abs_tol && result.iterations < 400) {
    const double m = 0.5 * (a + b);
    if (m == a || m == b) break;
    const double fm = f(m);
    ++result.iterations;
    if (fm == 0.0) {
      a = b = m;
      break;
    }
    if (std::signbit(fm) == std::signbit(fa)) {
      a = m;
      fa = fm;
    } else {
      b = m;
      fb = fm;
    }
  }
  double x = 0.5 * (a + b);
  if (df) {
    const double lo = std::min(a, b) - abs_tol;
    const double hi = std::max(a, b) + abs_tol;
    double fx = f(x);
    for (int k = 0; k < 4; ++k) {
      const double slope = df(x);
      if (!(std::abs(slope) > 0.0) || !std::isfinite(slope)) break;
      const double next = x - fx / slope;
      if (next < lo || next > hi) break;
      const double fnext = f(next);
      if (!(std::abs(fnext) < std::abs(fx))) break;
      x = next;
      fx = fnext;
      ++result.iterations;
    }
  }
  result.root = x;
  return result;
}

}  // namespace rflight
