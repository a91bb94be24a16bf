#pragma once

#include <span>
#include <vector>

#include "rflight/dynamics.hpp"
#include "rflight/model.hpp"
#include "rflight/rng.hpp"

namespace rflight {

/// Uniform direction on S^{d-1}: normalized vector of d standard normals.
std::vector<double> sample_direction(RngStream& rng, int d);

struct FreeTimeSample {
  double N = 0.0;       // flight duration
  double target = 0.0;  // the Exp(1) hazard target e
  double hazard = 0.0;  // F_n(N), equal to target up to the event tolerance
  FlightResult flight;
};

/// Draws e ~ Exp(1) and integrates the flight from x in direction u until
/// the accumulated hazard reaches e.
FreeTimeSample sample_free_time(std::span<const double> x, std::span<const double> u,
                                const ModelConfig& config, RngStream& rng,
                                const FlightOptions& extra = {});

/// Same flight for a given hazard target (replay without an RNG).
FreeTimeSample free_flight_for_target(std::span<const double> x, std::span<const double> u,
                                      const ModelConfig& config, double target,
                                      const FlightOptions& extra = {});

struct MomentEstimate {
  double mean = 0.0;
  double se = 0.0;
  double limit = 0.0;  // p! / (g(r0) v(r0))^p
  std::size_t count = 0;
  std::size_t failures = 0;
};

/// Monte Carlo estimate of E[(n^{1/4} N)^p]; sample i uses rng.substream(i).
MomentEstimate free_time_moment(std::span<const double> x, std::span<const double> u,
                                const ModelConfig& config, int p, std::size_t sample_count,
                                const RngStream& rng);

struct TailEstimate {
  double p = 0.0;
  double lower = 0.0;  // 95% Wilson interval
  double upper = 0.0;
  std::size_t count = 0;
};

TailEstimate wilson_interval(std::size_t successes, std::size_t count, double z = 1.96);

/// P(N >= eps) with a Wilson interval; sample i uses rng.substream(i).
TailEstimate tail_probability(std::span<const double> x, std::span<const double> u,
                              const ModelConfig& config, double eps, std::size_t sample_count,
                              const RngStream& rng);

}  // namespace rflight
