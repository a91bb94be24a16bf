#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rflight/dynamics.hpp"
#include "rflight/model.hpp"

using namespace rflight;

TEST_CASE("launch state velocity") {
  const std::vector<double> x{0.5, 0, 0}, u{1, 0, 0};
  const PhaseState s1 = launch_state(x, u, with_scaling(scenario_free(1.0, 2.0), 1.0));
  CHECK(s1.v[0] == doctest::Approx(1.0));
  CHECK(s1.v[1] == 0.0);
  const PhaseState s16 = launch_state(x, u, with_scaling(scenario_free(1.0, 2.0), 16.0));
  CHECK(s16.v[0] == doctest::Approx(0.5));
  const PhaseState h = launch_state(x, u, scenario_heuristic());
  CHECK(norm(h.v) == doctest::Approx(std::sqrt(0.5)));
  CHECK(h.energy == doctest::Approx(1.0));
}

TEST_CASE("free flight is a straight line") {
  const ModelConfig c = with_scaling(scenario_free(1.0, 2.0), 1.0);
  const std::vector<double> x{0.5, 0.2, -0.1}, u{0.6, 0.8, 0.0};
  const PhaseState s = launch_state(x, u, c);
  const PathSegment seg = integrate(s, 3.0, c);
  for (double t : {0.0, 0.37, 1.5, 3.0}) {
    const auto p = seg.state_at(t, c);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(p.x[i] - (x[i] + t * s.v[i])) < 1e-12);
  }
}

TEST_CASE("tangential launch under a central force stays planar") {
  const ModelConfig c = with_scaling(scenario_constant_force(1.0, 1.0, 2.0), 1.0);
  const std::vector<double> x{0.3, 0.1, 0.0}, u{-0.1 / std::hypot(0.3, 0.1), 0.3 / std::hypot(0.3, 0.1), 0.0};
  const PathSegment seg = integrate(launch_state(x, u, c), 2.0, c);
  for (const auto& s : seg.states) CHECK(std::abs(s.x[2]) <= 1e-12);
}

TEST_CASE("radial launch from the origin turns at r = E") {
  const ModelConfig c = with_scaling(scenario_heuristic(), 1.0);
  const std::vector<double> x{1e-12, 0, 0}, u{1, 0, 0};
  // Turning time: r = t - t^2/4 peaks at t = 2.
  const PathSegment seg = integrate(launch_state(x, u, c), 2.0, c);
  CHECK(seg.state_at(2.0, c).r == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(seg.state_at(1.0, c).r == doctest::Approx(0.75).epsilon(1e-8));
}

TEST_CASE("circular orbit of U = r") {
  const ModelConfig c = with_scaling(scenario_constant_force(1.0, 1.0, 2.0), 1.0);
  // Circular radius: m v^2 / r = U'(r) with v^2 = 2 (E - r) / m: 2 (1 - r) = r.
  const double rc = 2.0 / 3.0;
  const std::vector<double> x{rc, 0, 0}, u{0, 1, 0};
  const PathSegment seg = integrate(launch_state(x, u, c), 10.0, c);
  for (const auto& s : seg.states) CHECK(std::abs(s.r - rc) <= 1e-8);
}

TEST_CASE("polar reduction") {
  const ModelConfig c = with_scaling(scenario_heuristic(), 1.0);
  const double theta = 0.7, r0 = 0.5;
  const std::vector<double> x{r0, 0, 0}, u{std::cos(theta), std::sin(theta), 0};
  PathSegment seg = integrate(launch_state(x, u, c), 0.5, c);
  const auto polar = polar_reduce(seg, c);
  REQUIRE(!polar.empty());
  CHECK(polar.front().r_dot == doctest::Approx(speed(c, r0) * std::cos(theta)));
  CHECK(polar.front().alpha_dot == doctest::Approx(speed(c, r0) * std::sin(theta) / r0));
  for (const auto& p : polar) CHECK(p.r_ddot_residual < 1e-6);

  const std::vector<double> radial{1, 0, 0};
  const auto rp = polar_reduce(integrate(launch_state(x, radial, c), 0.5, c), c);
  for (const auto& p : rp) CHECK(std::abs(p.alpha_dot) < 1e-12);
}

TEST_CASE("second-order expansion residual") {
  const ModelConfig free = with_scaling(scenario_free(1.0, 2.0), 1.0);
  const std::vector<double> x{0.5, 0, 0}, radial{1, 0, 0};
  CHECK(std::abs(taylor_residual(integrate(launch_state(x, radial, free), 0.1, free), 0.05, free)) < 1e-14);
  const ModelConfig h = with_scaling(scenario_heuristic(), 1.0);
  const std::vector<double> oblique{0.6, 0.8, 0};
  const PathSegment seg = integrate(launch_state(x, oblique, h), 2e-3, h);
  CHECK(std::abs(taylor_residual(seg, 1e-3, h)) <= 1e-9);
  // At theta = pi/2 and r = r0 psi is the centripetal balance.
  const double r0 = 0.5;
  CHECK(psi(h, r0, r0, std::numbers::pi / 2) ==
        doctest::Approx(-h.dU(r0) / h.mass + speed(h, r0) * speed(h, r0) / r0));
}

TEST_CASE("hazard accumulation and invariants along a flight") {
  const ModelConfig c = with_scaling(scenario_heuristic(), 100.0);
  const std::vector<double> x{0.5, 0, 0}, u{0, 1, 0};
  FlightOptions o;
  o.hazard_target = 1.0;
  const FlightResult f = fly(launch_state(x, u, c), c, o);
  CHECK(f.reached_target);
  CHECK(f.hazard == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f.max_energy_drift < 1e-8);
  CHECK(f.max_L_drift < 1e-8);
  CHECK(f.final_state.energy == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("passing through the origin") {
  const ModelConfig c = with_scaling(scenario_heuristic(), 1.0);
  const std::vector<double> x{0.5, 0, 0}, inward{-1, 0, 0};
  FlightOptions o;
  o.t_end = 2.0;
  const FlightResult f = fly(launch_state(x, inward, c), c, o);
  CHECK(f.origin_crossings == 1);
  CHECK(f.final_state.x[0] < 0.0);
  CHECK(f.final_state.energy == doctest::Approx(1.0).epsilon(1e-8));
}
