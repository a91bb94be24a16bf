#include <doctest.h>

#include <cmath>

#include "rflight/boundary.hpp"
#include "rflight/diffusion.hpp"
#include "rflight/model.hpp"
#include "rflight/rng.hpp"

using namespace rflight;

namespace {

ModelConfig printed(ModelConfig c) {
  c.radial = RadialConvention::AsPrinted;
  return c;
}

}  // namespace

TEST_CASE("free scale function") {
  const ModelConfig free = scenario_free(1.0, 2.0);
  const ScaleSpeed ss(free, 0.5, 0.5);
  CHECK(scale_function(ss, 0.5).value == 0.0);
  // Ito: s' = (a / y)^2, so s(x) = a - a^2 / x.
  for (double x : {0.1, 0.3, 2.0, 9.0}) {
    CHECK(std::abs(scale_function(ss, x).value - (0.5 - 0.25 / x)) < 1e-8);
  }
  CHECK(scale_function(ss, 0.0).divergent);
  // Single power of y: s(x) = a ln(x / a).
  const ScaleSpeed sp(printed(free), 0.5, 0.5);
  for (double x : {0.1, 0.3, 2.0}) CHECK(std::abs(scale_function(sp, x).value - 0.5 * std::log(x / 0.5)) < 1e-8);
  CHECK(scale_function(sp, 0.0).divergent);
  CHECK(scale_function(sp, 0.0).value == -kInfinity);
}

TEST_CASE("constant force scale density") {
  const ModelConfig cf = scenario_constant_force(1.0, 1.0, 2.0);
  const ScaleSpeed sp(printed(cf), 0.5, 0.5);
  // s' proportional to 1 / (y (h - y)).
  for (double y : {0.1, 0.4, 0.8}) CHECK(sp.scale_density(y) == doctest::Approx(0.25 / (y * (1 - y))));
  const ScaleSpeed si(cf, 0.5, 0.5);
  for (double y : {0.1, 0.4, 0.8}) CHECK(si.scale_density(y) == doctest::Approx(0.125 / (y * y * (1 - y))));
  CHECK(scale_function(si, 0.0).divergent);
  CHECK(scale_function(si, 1.0).divergent);
}

TEST_CASE("speed density identity") {
  const ModelConfig c = with_linear_density(scenario_heuristic(), 0.7, 1.2);
  const ScaleSpeed ss(c);
  RngStream rng(51, 0);
  for (int i = 0; i < 100; ++i) {
    const double x = 0.01 + 0.98 * rng.uniform();
    CHECK(ss.speed_density(x) == doctest::Approx(2.0 / (ss.sigma_r2(x) * ss.scale_density(x))));
    CHECK(ss.sigma_r2(x) == doctest::Approx(2.0 / 3.0 / (c.g(x) * c.g(x))));
  }
}

TEST_CASE("speed density shapes") {
  const double E = 1.0, k = 1.0;
  const ModelConfig nw = scenario_newtonian(k, E, 2.0);
  const ScaleSpeed sp(printed(nw));
  const double ref = sp.speed_density(0.5) / (E * 0.5 + k);
  for (double x : {1e-4, 0.1, 2.0, 10.0}) CHECK(sp.speed_density(x) / (E * x + k) == doctest::Approx(ref));
  const ScaleSpeed si(nw);
  const double refi = si.speed_density(0.5) / (0.5 * (E * 0.5 + k));
  for (double x : {1e-4, 0.1, 2.0}) CHECK(si.speed_density(x) / (x * (E * x + k)) == doctest::Approx(refi));

  const ModelConfig cf = scenario_constant_force(1.0, 1.0, 2.0);
  const ScaleSpeed cp(printed(cf));
  const double rc = cp.speed_density(0.5) / (0.5 * 0.5);
  for (double x : {0.01, 0.3, 0.99}) CHECK(cp.speed_density(x) / (x * (1 - x)) == doctest::Approx(rc));
}

TEST_CASE("boundary classification of library scenarios") {
  for (bool upper : {false, true}) {
    CHECK(classify_boundary(scenario_constant_force(1.0, 1.0, 2.0), upper).classification ==
          Accessibility::Inaccessible);
    CHECK(classify_boundary(scenario_newtonian(1.0, 1.0, 2.0), upper).classification ==
          Accessibility::Inaccessible);
  }
  const BoundaryEntry cf = classify_boundary(scenario_constant_force(1.0, 1.0, 2.0), true);
  REQUIRE(cf.alpha);
  CHECK(*cf.alpha >= 0.99);
  // Finite potential at the origin.
  CHECK(classify_boundary(scenario_harmonic(1.0, 4.0, 2.0), false).classification ==
        Accessibility::Inaccessible);
  CHECK(classify_boundary(scenario_heuristic(), false).classification == Accessibility::Inaccessible);
  const BoundaryReport rep = classify_boundaries(scenario_newtonian());
  REQUIRE(rep.endpoints.size() == 2);
  const auto j = to_json(rep);
  CHECK(j["endpoints"][0]["classification"] == "inaccessible");
  CHECK(j["endpoints"][1]["location"].is_null());
}

TEST_CASE("a strongly attractive origin is accessible") {
  ModelConfig c;
  c.potential = PotentialSpec::from_expression("-1/r^3", true);
  c.density = DensitySpec::constant(1.0);
  c.mass = 2.0;
  c.energy = 1.0;
  c.domain = {0.0, kInfinity, EndpointKind::Origin, EndpointKind::Infinity};
  const BoundaryEntry e = classify_boundary(c, false);
  CHECK(e.classification == Accessibility::Accessible);
  REQUIRE(e.alpha);
  CHECK(*e.alpha < 0.9);
}

TEST_CASE("hitting probability") {
  const ModelConfig free = scenario_free(1.0, 2.0);
  const double l = 0.3, u = 0.7;
  CHECK(hitting_probability(free, l, l, u) == 0.0);
  CHECK(hitting_probability(free, u, l, u) == 1.0);
  const double x = 0.5;
  CHECK(hitting_probability(free, x, l, u) == doctest::Approx((1 / l - 1 / x) / (1 / l - 1 / u)).epsilon(1e-9));
  CHECK(hitting_probability(printed(free), x, l, u) ==
        doctest::Approx((std::log(x) - std::log(l)) / (std::log(u) - std::log(l))).epsilon(1e-9));
}

TEST_CASE("hitting probability against simulated exits") {
  const ModelConfig h = scenario_heuristic();
  const double l = 0.3, u = 0.7, x = 0.5;
  const double p = hitting_probability(h, x, l, u);
  DiffusionOptions o;
  o.dt = 1e-5;
  o.band = std::make_pair(l, u);
  const RngStream root(52, 0);
  const int paths = 10000;
  int upper = 0;
  for (int i = 0; i < paths; ++i) {
    RngStream s = root.substream(static_cast<std::uint64_t>(i));
    upper += simulate_Gr(x, h, o, s).exit_side > 0 ? 1 : 0;
  }
  const double freq = static_cast<double>(upper) / paths;
  CHECK(std::abs(freq - p) < 3 * std::sqrt(p * (1 - p) / paths));
}
