#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rflight/errors.hpp"
#include "rflight/expression.hpp"
#include "rflight/ks.hpp"
#include "rflight/ode.hpp"
#include "rflight/parallel.hpp"
#include "rflight/quadrature.hpp"
#include "rflight/rng.hpp"
#include "rflight/roots.hpp"

using namespace rflight;

TEST_CASE("philox4x32-10 known answers") {
  const auto zero = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(zero == std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  const auto ones = philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                               {0xffffffff, 0xffffffff});
  CHECK(ones == std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  const auto pi = philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                             {0xa4093822, 0x299f31d0});
  CHECK(pi == std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and substreams independent of consumption") {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream fresh(42, 7);
  const double first_sub = fresh.substream(3).uniform();
  CHECK(a.substream(3).uniform() == first_sub);
  CHECK(RngStream(42, 8).uniform() != RngStream(42, 7).uniform());
  CHECK(RngStream(43, 7).uniform() != RngStream(42, 7).uniform());
}

TEST_CASE("uniform, exponential and normal moments") {
  RngStream s(1, 0);
  const int n = 200000;
  double su = 0, se = 0, se2 = 0, sn = 0, sn2 = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    const double e = s.exponential();
    se += e;
    se2 += e * e;
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(umin > 0.0);
  CHECK(umax < 1.0);
  CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(se / n - 1.0) < 4 * std::sqrt(1.0 / n));
  CHECK(std::abs(se2 / n - 2.0) < 4 * std::sqrt(20.0 / n));
  CHECK(std::abs(sn / n) < 4 * std::sqrt(1.0 / n));
  CHECK(std::abs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));
}

TEST_CASE("quadrature on smooth and endpoint-singular integrands") {
  CHECK(integrate_adaptive([](double) { return 1.0; }, 0, 1).value == doctest::Approx(1.0).epsilon(1e-14));
  const auto r = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0, 1, 1e-12);
  CHECK(std::abs(r.value - 2.0) <= 1e-10);
  const auto ts = tanh_sinh([](double x) { return std::log(x); }, 0, 1, 1e-12);
  CHECK(std::abs(ts.value + 1.0) <= 1e-10);
  const auto simp = adaptive_simpson([](double x) { return std::sin(x); }, 0, std::numbers::pi, 1e-12);
  CHECK(std::abs(simp.value - 2.0) <= 1e-10);
}

TEST_CASE("partial fractions of 1/(y(h-y))") {
  const double h = 1.0;
  auto f = [&](double y) { return 1.0 / (y * (h - y)); };
  // 1/(y(h-y)) = (1/h)(1/y + 1/(h-y)); antiderivative (1/h) ln(y/(h-y)).
  auto F = [&](double y) { return std::log(y / (h - y)) / h; };
  const auto r = integrate_adaptive(f, 0.1, 0.9, 1e-12);
  CHECK(std::abs(r.value - (F(0.9) - F(0.1))) <= 1e-9);
}

TEST_CASE("gauss-hermite rule integrates normal moments") {
  const GaussRule rule = gauss_hermite_normal(8);
  auto moment = [&](int p) {
    double s = 0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], p);
    return s;
  };
  CHECK(moment(0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(moment(1)) < 1e-13);
  CHECK(moment(2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(moment(4) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(moment(6) == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(moment(14) == doctest::Approx(135135.0).epsilon(1e-10));
}

TEST_CASE("bracketed root finding") {
  const auto r = find_root_bracketed([](double x) { return 4.0 - x * x; }, 0.0, 3.0);
  CHECK(std::abs(r.root - 2.0) < 1e-12);
  const auto c = find_root_bracketed([](double x) { return std::cos(x) - x; }, 0.0, 1.0, 1e-14);
  CHECK(std::abs(std::cos(c.root) - c.root) < 1e-13);
}

TEST_CASE("dop853 on exponential decay") {
  Dop853 ode([](double, std::span<const double> y, std::span<double> dy) { dy[0] = -y[0]; }, 1,
             {1e-10, 1e-10});
  const double y0 = 1.0;
  ode.reset(0.0, std::span<const double>(&y0, 1));
  int steps = 0;
  while (!ode.step(1.0)) REQUIRE(++steps < 10000);
  CHECK(ode.t() == 1.0);
  CHECK(std::abs(ode.y()[0] - std::exp(-1.0)) <= 1e-10);
}

TEST_CASE("dop853 harmonic oscillator energy over one period") {
  Dop853 ode(
      [](double, std::span<const double> y, std::span<double> dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
      },
      2, {1e-10, 1e-10});
  const std::vector<double> y0{1.0, 0.0};
  ode.reset(0.0, y0);
  const double period = 2 * std::numbers::pi;
  double worst = 0;
  DenseStep last;
  bool done = false;
  while (!done) {
    done = ode.step(period);
    const auto y = ode.y();
    worst = std::max(worst, std::abs(0.5 * (y[0] * y[0] + y[1] * y[1]) - 0.5));
    last = ode.dense();
  }
  CHECK(worst <= 1e-9);
  CHECK(std::abs(ode.y()[0] - 1.0) < 1e-9);
  // Dense output against the closed-form orbit inside the last step.
  const double tm = 0.5 * (last.t_begin() + last.t_end());
  CHECK(std::abs(last.eval_component(tm, 0) - std::cos(tm)) < 1e-9);
  CHECK(std::abs(last.eval_component(tm, 1) + std::sin(tm)) < 1e-9);
}

TEST_CASE("event location at ln 2") {
  const double y0 = 1.0;
  double t = 0.0, dt = 0.3;
  std::vector<double> y{y0};
  std::optional<double> hit;
  auto f = [](double, std::span<const double> s, std::span<double> d) { d[0] = -s[0]; };
  while (!hit && t < 5.0) {
    RkStepResult step = rk_step_dense(f, y, t, dt, {1e-12, 1e-12});
    hit = locate_event(step.interpolant,
                       [](double, std::span<const double> s) { return s[0] - 0.5; }, 1e-13);
    t = step.t;
    y = step.state;
    dt = step.dt_next;
  }
  REQUIRE(hit);
  CHECK(std::abs(*hit - std::log(2.0)) <= 1e-10);
}

TEST_CASE("kolmogorov distribution tail") {
  CHECK(kolmogorov_q(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
  CHECK(kolmogorov_q(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
  CHECK(kolmogorov_q(1.5) == doctest::Approx(0.022217962616525127).epsilon(1e-10));
  CHECK(kolmogorov_q(0.0) == 1.0);
}

TEST_CASE("ks statistic of a regular grid") {
  // x_i = (i - 0.5) / 20 + 0.01: D = 0.5 / 20 + 0.01 = 0.035.
  std::vector<double> s;
  for (int i = 20; i >= 1; --i) s.push_back((i - 0.5) / 20.0 + 0.01);
  const auto r = ks_statistic(s, [](double x) { return std::clamp(x, 0.0, 1.0); });
  CHECK(r.statistic == doctest::Approx(0.035));
  CHECK(r.count == 20);
  CHECK(r.p_value == doctest::Approx(kolmogorov_q(std::sqrt(20.0) * 0.035)));
  CHECK_THROWS(ks_statistic(std::vector<double>(5, 0.5), [](double x) { return x; }));
}

TEST_CASE("ks calibration and power") {
  auto exp_cdf = [](double rate) { return [rate](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-rate * x); }; };
  RngStream rng(9, 0);
  int rejections = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> xs(200);
    for (auto& x : xs) x = rng.exponential();
    rejections += ks_statistic(xs, exp_cdf(1.0)).p_value < 0.01 ? 1 : 0;
  }
  // Binomial(1000, 0.01): mean 10, sd about 3.1.
  CHECK(rejections <= 25);
  std::vector<double> xs(10000);
  for (auto& x : xs) x = rng.exponential();
  CHECK(ks_statistic(xs, exp_cdf(2.0)).p_value < 1e-6);
  CHECK(ks_statistic(xs, exp_cdf(1.0)).p_value > 0.01);
}

TEST_CASE("expression parser") {
  const auto e = Expression::parse("2*r^2 - 1/r + exp(-r) + sqrt(r)");
  const double r = 0.7;
  CHECK(e.value(r) == doctest::Approx(2 * r * r - 1 / r + std::exp(-r) + std::sqrt(r)));
  CHECK(e.derivative(r) == doctest::Approx(4 * r + 1 / (r * r) - std::exp(-r) + 0.5 / std::sqrt(r)));
  CHECK_THROWS_AS(Expression::parse("2*"), ConfigError);
  CHECK_THROWS_AS(Expression::parse("foo(r)"), ConfigError);
}

TEST_CASE("parallel map keeps index order and rethrows") {
  const auto v = parallel_map(100, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<int>(i * i));
  CHECK_THROWS_AS(parallel_map(10, 3, [](std::size_t i) -> int {
                    if (i == 5) throw NumericError("boom");
                    return 0;
                  }),
                  NumericError);
}
