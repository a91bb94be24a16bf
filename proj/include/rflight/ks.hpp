#pragma once

#include <functional>
#include <span>

namespace rflight {

/// Kolmogorov survival function Q(x) = P(K > x) for the limiting
/// distribution of sqrt(n) D_n. Series truncated once terms fall below tol.
double kolmogorov_q(double x, double tol = 1e-10);

struct KsResult {
  double statistic = 0.0;  // D_n
  double p_value = 1.0;
  std::size_t count = 0;
};

/// One-sample two-sided KS test against a continuous CDF, asymptotic
/// p-value Q(sqrt(n) D_n). Needs at least 20 finite samples.
KsResult ks_statistic(std::span<const double> samples,
                      const std::function<double(double)>& cdf);

}  // namespace rflight
