#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rflight/collision.hpp"
#include "rflight/ks.hpp"
#include "rflight/model.hpp"

using namespace rflight;

TEST_CASE("direction sampling is isotropic") {
  RngStream rng(5, 0);
  const int n = 1000000;
  double m[3] = {0, 0, 0}, q[3][3] = {};
  for (int k = 0; k < n; ++k) {
    const auto u = sample_direction(rng, 3);
    CHECK_MESSAGE(std::abs(norm(u) - 1.0) < 1e-14, "unit length");
    for (int i = 0; i < 3; ++i) {
      m[i] += u[i];
      for (int j = 0; j < 3; ++j) q[i][j] += u[i] * u[j];
    }
  }
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(m[i] / n) < 3.5 / std::sqrt(n));
    for (int j = 0; j < 3; ++j) {
      // Var(u_i u_j): 1/5 - 1/9 on the diagonal, 1/15 off it.
      const double sd = std::sqrt((i == j ? 1.0 / 5 - 1.0 / 9 : 1.0 / 15) / n);
      CHECK(std::abs(q[i][j] / n - (i == j ? 1.0 / 3 : 0.0)) < 3 * sd);
    }
  }
}

TEST_CASE("planar directions have uniform angle") {
  RngStream rng(6, 0);
  std::vector<double> angles(20000);
  for (auto& a : angles) {
    const auto u = sample_direction(rng, 2);
    a = std::atan2(u[1], u[0]);
  }
  const auto r = ks_statistic(angles, [](double a) { return (a + std::numbers::pi) / (2 * std::numbers::pi); });
  CHECK(r.p_value > 0.01);
}

TEST_CASE("constant hazard gives exponential free times") {
  const double n = 1e4;
  const ModelConfig c = with_scaling(scenario_free(1.0, 2.0), n);
  const std::vector<double> x{0.5, 0, 0};
  RngStream rng(11, 0);
  const int count = 100000;
  double s = 0, s2 = 0;
  for (int k = 0; k < count; ++k) {
    const auto u = sample_direction(rng, 3);
    const double t = std::pow(n, 0.25) * sample_free_time(x, u, c, rng).N;
    s += t;
    s2 += t * t;
  }
  const double mean = s / count;
  const double se = std::sqrt((s2 / count - mean * mean) / count);
  CHECK(std::abs(mean - 1.0) < 3 * se);
}

TEST_CASE("integrated hazard at the free time is Exp(1)") {
  const ModelConfig c = with_scaling(scenario_heuristic(), 100.0);
  const std::vector<double> x{0.5, 0, 0};
  RngStream rng(12, 0);
  std::vector<double> h(10000);
  for (auto& v : h) {
    const auto u = sample_direction(rng, 3);
    v = sample_free_time(x, u, c, rng).hazard;
  }
  CHECK(ks_statistic(h, [](double t) { return t <= 0 ? 0.0 : 1.0 - std::exp(-t); }).p_value > 0.01);
}

TEST_CASE("free time moments") {
  const std::vector<double> x{0.5, 0, 0}, u{0, 0, 1};
  const ModelConfig free = with_scaling(scenario_free(1.0, 2.0), 256.0);
  const auto m1 = free_time_moment(x, u, free, 1, 20000, RngStream(3, 0));
  const auto m2 = free_time_moment(x, u, free, 2, 20000, RngStream(3, 1));
  CHECK(m1.limit == doctest::Approx(1.0));
  CHECK(m2.limit == doctest::Approx(2.0));
  CHECK(std::abs(m1.mean - 1.0) < 3 * m1.se);
  CHECK(std::abs(m2.mean - 2.0) < 3 * m2.se);

  const ModelConfig h = with_scaling(scenario_heuristic(), 1e4);
  const auto hm = free_time_moment(x, u, h, 1, 20000, RngStream(3, 2));
  CHECK(hm.limit == doctest::Approx(1.0 / std::sqrt(0.5)));
  CHECK(hm.failures == 0);
  CHECK(std::abs(hm.mean - hm.limit) < 3 * hm.se + 0.05 * hm.limit);
  const auto hm2 = free_time_moment(x, u, h, 2, 20000, RngStream(3, 3));
  CHECK(hm2.limit == doctest::Approx(2.0 / 0.5));
}

TEST_CASE("tail probability") {
  const std::vector<double> x{0.5, 0, 0}, u{0, 1, 0};
  const ModelConfig free = with_scaling(scenario_free(1.0, 2.0), 16.0);
  const auto t = tail_probability(x, u, free, 0.5, 20000, RngStream(4, 0));
  const double exact = std::exp(-2.0 * 0.5);
  CHECK(t.lower <= exact);
  CHECK(t.upper >= exact);

  const ModelConfig h = scenario_heuristic();
  double previous = 1.0;
  for (double n : {16.0, 256.0, 4096.0}) {
    const auto e = tail_probability(x, u, with_scaling(h, n), 1.0, 4000, RngStream(4, 1));
    CHECK(e.p < previous);
    previous = e.p;
  }
  const auto e256 = tail_probability(x, u, with_scaling(h, 256.0), 1.0, 4000, RngStream(4, 2));
  // Hazard rate is at least n^{1/4} inf g inf v along any flight that stays below r = 0.9.
  CHECK(e256.p <= std::exp(-4.0 * std::sqrt(0.1)));
}

TEST_CASE("wilson interval") {
  const auto w = wilson_interval(50, 100);
  CHECK(w.p == 0.5);
  CHECK(w.lower == doctest::Approx(0.4038).epsilon(1e-3));
  CHECK(w.upper == doctest::Approx(0.5962).epsilon(1e-3));
}
