#include "rflight/ks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rflight/errors.hpp"

namespace rflight {

double kolmogorov_q(double x, double tol) {
  if (!(x > 0.0)) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (x < 1.0) {
    // Jacobi theta form: 1 - Q = sqrt(2 pi)/x * sum exp(-(2k-1)^2 pi^2 / (8 x^2)).
    const double c = -pi * pi / (8.0 * x * x);
    double sum = 0.0;
    for (int k = 1; k < 1000; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(c * odd * odd);
      sum += term;
      if (term < tol * sum) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / x * sum, 0.0, 1.0);
  }
  // Alternating series: Q = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
  double sum = 0.0;
  for (int k = 1; k < 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < tol) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_statistic(std::span<const double> samples,
                      const std::function<double(double)>& cdf) {
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double s : sorted) {
    if (!std::isfinite(s)) throw DomainError("ks_statistic: non-finite sample");
  }
  if (sorted.size() < 20) throw DomainError("ks_statistic: need at least 20 samples");
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  KsResult result;
  result.statistic = d;
  result.count = sorted.size();
  result.p_value = kolmogorov_q(std::sqrt(n) * d);
  return result;
}

}  // namespace rflight
