#include "rflight/collision.hpp"

#include <cmath>

#include "rflight/errors.hpp"

namespace rflight {

std::vector<double> sample_direction(RngStream& rng, int d) {
  if (d < 2) throw DomainError("sample_direction: d must be at least 2");
  std::vector<double> u(static_cast<std::size_t>(d));
  double s = 0.0;
  do {
    rng.fill_normal(u);
    s = norm(u);
  } while (!(s > 1e-300));
  for (double& c : u) c /= s;
  return u;
}

FreeTimeSample free_flight_for_target(std::span<const double> x, std::span<const double> u,
                                      const ModelConfig& config, double target,
                                      const FlightOptions& extra) {
  FlightOptions options = extra;
  options.hazard_target = target;
  FreeTimeSample s;
  s.target = target;
  s.flight = fly(launch_state(x, u, config), config, options);
  s.N = s.flight.duration;
  s.hazard = s.flight.hazard;
  return s;
}

FreeTimeSample sample_free_time(std::span<const double> x, std::span<const double> u,
                                const ModelConfig& config, RngStream& rng,
                                const FlightOptions& extra) {
  const double e = rng.exponential();
  return free_flight_for_target(x, u, config, e, extra);
}

MomentEstimate free_time_moment(std::span<const double> x, std::span<const double> u,
                                const ModelConfig& config, int p, std::size_t sample_count,
                                const RngStream& rng) {
  if (p < 1) throw DomainError("free_time_moment: order must be at least 1");
  const double r0 = norm(x);
  const double rate = config.g(r0) * speed(config, r0);
  const double scale = std::pow(config.n, 0.25);
  MomentEstimate m;
  double factorial = 1.0;
  for (int k = 2; k <= p; ++k) factorial *= k;
  m.limit = factorial / std::pow(rate, p);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < sample_count; ++i) {
    RngStream s = rng.substream(i);
    try {
      const double v = std::pow(scale * sample_free_time(x, u, config, s).N, p);
      sum += v;
      sum2 += v * v;
      ++m.count;
    } catch (const NumericError&) {
      ++m.failures;
    }
  }
  if (m.count > 0) {
    const double c = static_cast<double>(m.count);
    m.mean = sum / c;
    const double var = m.count > 1 ? std::max(0.0, (sum2 - c * m.mean * m.mean) / (c - 1.0)) : 0.0;
    m.se = std::sqrt(var / c);
  }
  return m;
}

TailEstimate wilson_interval(std::size_t successes, std::size_t count, double z) {
  TailEstimate t;
  t.count = count;
  if (count == 0) return t;
  const double n = static_cast<double>(count);
  const double p = successes / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  t.p = p;
  t.lower = std::max(0.0, centre - half);
  t.upper = std::min(1.0, centre + half);
  return t;
}

TailEstimate tail_probability(std::span<const double> x, std::span<const double> u,
                              const ModelConfig& config, double eps, std::size_t sample_count,
                              const RngStream& rng) {
  if (!(eps > 0.0)) throw DomainError("tail_probability: eps must be positive");
  std::size_t hits = 0;
  FlightOptions options;
  // Only whether N >= eps matters: stop the flight at eps.
  options.t_end = eps;
  for (std::size_t i = 0; i < sample_count; ++i) {
    RngStream s = rng.substream(i);
    const FreeTimeSample f = sample_free_time(x, u, config, s, options);
    if (!f.flight.reached_target) ++hits;
  }
  return wilson_interval(hits, sample_count);
}

}  // namespace rflight
