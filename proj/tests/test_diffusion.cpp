#include <doctest.h>

#include <cmath>

#include "rflight/diffusion.hpp"
#include "rflight/model.hpp"
#include "rflight/stats.hpp"

using namespace rflight;

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  double s = 0, q = 0;
  for (double x : v) {
    s += x;
    q += x * x;
  }
  const double n = static_cast<double>(v.size());
  const double m = s / n;
  return {m, std::sqrt((q / n - m * m) / (n - 1))};
}

}  // namespace

TEST_CASE("coefficients of the heuristic configuration") {
  const DiffusionCoefficients k(scenario_heuristic());
  CHECK(k.radial_drift(0.5) == doctest::Approx(-2.0 / 3.0));
  const std::vector<double> x{0.3, 0.4, 0};
  const auto b = k.drift(x);
  CHECK(b[0] == doctest::Approx(-2.0 / 3.0 * 0.6));
  CHECK(b[1] == doctest::Approx(-2.0 / 3.0 * 0.8));
  CHECK(k.sigma2(0.5) == doctest::Approx(2.0 / 3.0));
  CHECK(k.clock_rate(0.5) == doctest::Approx(std::sqrt(0.5)));
  CHECK(k.kappa() == 2.0);
  // Radial process drift adds kappa sigma^2 / (2 r).
  CHECK(k.radial_process_drift(0.5) == doctest::Approx(-2.0 / 3.0 + 2.0 / 3.0 / 0.5));
  // Equilibrium: 2/(3r) = 1/(3(1-r)) at r = 2/3.
  CHECK(std::abs(k.radial_process_drift(2.0 / 3.0)) < 1e-12);

  ModelConfig printed = scenario_heuristic();
  printed.radial = RadialConvention::AsPrinted;
  CHECK(DiffusionCoefficients(printed).kappa() == 1.0);
}

TEST_CASE("free radial process is a rescaled Bessel process") {
  const ModelConfig c = scenario_free(1.0, 2.0);
  const double r0 = 0.5, t = 0.5;
  DiffusionOptions o;
  o.horizon = t;
  o.dt = 1e-3;
  const RngStream root(41, 0);
  const std::size_t paths = 20000;
  std::vector<double> g2(paths), gr2(paths);
  for (std::size_t i = 0; i < paths; ++i) {
    RngStream a = root.substream(2 * i), b = root.substream(2 * i + 1);
    const std::vector<double> x0{r0, 0, 0};
    const auto p = simulate_G(x0, c, o, a);
    g2[i] = std::pow(norm(p.final_state), 2);
    const auto q = simulate_Gr(r0, c, o, b);
    gr2[i] = q.final_state[0] * q.final_state[0];
  }
  // Ito: E R_t^2 = r0^2 + d sigma^2 t = r0^2 + 2 t.
  const auto mg = mean_se(g2), mr = mean_se(gr2);
  CHECK(std::abs(mg.mean - (r0 * r0 + 2 * t)) < 3 * mg.se);
  CHECK(std::abs(mr.mean - (r0 * r0 + 2 * t)) < 3 * mr.se + 0.01);
}

TEST_CASE("radial marginal of G matches the radial process") {
  const ModelConfig c = scenario_heuristic();
  DiffusionOptions o;
  o.horizon = 0.05;
  o.dt = 1e-4;
  o.band = std::make_pair(0.05, 0.95);
  const RngStream root(42, 0);
  const std::size_t paths = 1500;
  std::vector<std::vector<double>> a(paths), b(paths);
  for (std::size_t i = 0; i < paths; ++i) {
    RngStream s1 = root.substream(2 * i), s2 = root.substream(2 * i + 1);
    const std::vector<double> x0{0.5, 0, 0};
    a[i] = {norm(simulate_G(x0, c, o, s1).final_state)};
    b[i] = {simulate_Gr(0.5, c, o, s2).final_state[0]};
  }
  CHECK(energy_distance_test(a, b, 199, RngStream(43, 0)).p_value > 0.01);
}

TEST_CASE("free exit time from an annulus") {
  const ModelConfig c = scenario_free(1.0, 2.0);
  const double l = 0.3, u = 0.7, r0 = 0.5;
  // (sigma^2 / 2)(f'' + 2 f'/r) = -1 with sigma^2 = 2/3: f = -r^2/2 + A + B/r.
  const double B = -(u * u - l * l) / 2.0 / (1.0 / l - 1.0 / u);
  const double A = l * l / 2.0 - B / l;
  const double expected = -r0 * r0 / 2.0 + A + B / r0;
  DiffusionOptions o;
  o.dt = 1e-5;
  o.band = std::make_pair(l, u);
  const RngStream root(44, 0);
  std::vector<double> times;
  for (std::size_t i = 0; i < 4000; ++i) {
    RngStream s = root.substream(i);
    const auto p = simulate_Gr(r0, c, o, s);
    REQUIRE(p.exited);
    times.push_back(*p.exit_time);
  }
  const auto m = mean_se(times);
  // Discrete monitoring overshoots by O(sqrt(dt)) in space.
  CHECK(std::abs(m.mean - expected) < 3 * m.se + 0.02 * expected);
}

TEST_CASE("time change with a constant clock") {
  const ModelConfig c = scenario_free(4.0, 2.0);  // g v = 2
  DiffusionOptions o;
  o.horizon = 1.0;
  o.dt = 1e-3;
  o.record_path = true;
  RngStream s(45, 0);
  const std::vector<double> x0{0.5, 0, 0};
  const auto p = simulate_G(x0, c, o, s);
  CHECK(p.final_A == doctest::Approx(0.5).epsilon(1e-9));
  for (double t : {0.1, 0.25, 0.4}) CHECK(time_change_Omega(p, t) == doctest::Approx(2 * t).epsilon(1e-9));
  const ModelConfig h = scenario_heuristic();
  o.band = std::make_pair(0.1, 0.9);
  RngStream s2(46, 0);
  const auto q = simulate_G(x0, h, o, s2);
  for (std::size_t k = 1; k < q.t.size(); k += 97) {
    CHECK(time_change_Omega(q, q.A[k]) == doctest::Approx(q.t[k]).epsilon(1e-9));
    CHECK(q.A[k] > q.A[k - 1]);
  }
  const auto mid = path_state_at(q, 0.5 * (q.t[10] + q.t[11]));
  CHECK(mid[0] == doctest::Approx(0.5 * (q.states[10][0] + q.states[11][0])));
}

TEST_CASE("time-changed path matches the natural-clock process") {
  const ModelConfig c = scenario_heuristic();
  const double clock = 0.05;
  const RngStream root(47, 0);
  const std::size_t paths = 1500;
  std::vector<std::vector<double>> a(paths), b(paths);
  const std::vector<double> x0{0.5, 0, 0};
  for (std::size_t i = 0; i < paths; ++i) {
    DiffusionOptions o;
    o.dt = 1e-4;
    o.clock_horizon = clock;
    o.record_path = true;
    RngStream s1 = root.substream(2 * i), s2 = root.substream(2 * i + 1);
    const auto p = simulate_G(x0, c, o, s1);
    a[i] = path_state_at(p, time_change_Omega(p, clock));
    DiffusionOptions on;
    on.dt = 1e-4;
    on.horizon = clock;
    b[i] = simulate_natural(x0, c, on, s2).final_state;
  }
  CHECK(energy_distance_test(a, b, 199, RngStream(48, 0)).p_value > 0.01);
}

TEST_CASE("generator on test functions") {
  const ModelConfig c = scenario_heuristic();
  const std::vector<double> x{0.5, 0, 0};
  const double b = -2.0 / 3.0, s2 = 2.0 / 3.0;
  CHECK(apply_generator(squared_norm_function(), x, c) == doctest::Approx(3 * s2 + 2 * b * 0.5));
  CHECK(apply_generator(linear_function({1.0, 2.0, 3.0}), x, c) == doctest::Approx(b));

  const std::vector<double> dts{1e-2, 1e-3, 1e-4};
  const auto gh = generator_residual(squared_norm_function(), x, c, dts, ResidualMode::GaussHermite, 0,
                                     RngStream(1, 0));
  for (std::size_t i = 0; i < dts.size(); ++i) {
    // One Euler step: E|x + b dt + s Z|^2 - |x|^2 = (2 b.x + d s^2) dt + |b|^2 dt^2.
    CHECK(gh.residual[i] == doctest::Approx(b * b * dts[i]).epsilon(1e-8));
    if (i > 0) CHECK(std::abs(gh.residual[i]) < std::abs(gh.residual[i - 1]));
  }
  const std::vector<double> one{1e-4};
  const auto mc = generator_residual(linear_function({1.0, 0.0, 0.0}), x, c, one,
                                     ResidualMode::MonteCarlo, 100000, RngStream(49, 0));
  CHECK(std::abs(mc.residual[0]) < 3 * mc.se[0]);
}
