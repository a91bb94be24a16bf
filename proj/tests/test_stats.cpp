#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rflight/model.hpp"
#include "rflight/stats.hpp"

using namespace rflight;

namespace {

// Independent drift oracle for a radial model at x = (r, 0, ...).
double radial_drift_oracle(const ModelConfig& c, double r) {
  const double d = c.dim, g = c.g(r), v2 = 2.0 * (c.energy - c.U(r)) / c.mass;
  return -(1.0 / (d * g * g)) * ((d - 1.0) * c.dU(r) / (c.mass * v2) + c.dg(r) / g);
}

}  // namespace

TEST_CASE("limit moments of the heuristic configuration") {
  const ModelConfig c = scenario_heuristic();
  const std::vector<double> x{0.5, 0, 0};
  const TheoreticalMoments t = theoretical_moments(x, c);
  REQUIRE(t.drift.size() == 4);
  CHECK(t.drift[0] == doctest::Approx(-2.0 / 3.0));
  CHECK(t.drift[0] == doctest::Approx(radial_drift_oracle(c, 0.5)));
  CHECK(t.drift[1] == 0.0);
  CHECK(t.drift[2] == 0.0);
  CHECK(t.drift[3] == doctest::Approx(1.0 / std::sqrt(0.5)));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      CHECK(t.cov_at(i, j) == doctest::Approx(i == j && i < 3 ? 2.0 / 3.0 : 0.0));
    }
  }
  // Off-axis point: the drift points along x-hat.
  const std::vector<double> y{0.3, 0.4, 0};
  const TheoreticalMoments ty = theoretical_moments(y, c);
  CHECK(ty.drift[0] == doctest::Approx(radial_drift_oracle(c, 0.5) * 0.6));
  CHECK(ty.drift[1] == doctest::Approx(radial_drift_oracle(c, 0.5) * 0.8));
}

TEST_CASE("limit moments reduce correctly") {
  const ModelConfig free = scenario_free(4.0, 2.0);
  const std::vector<double> x{0.5, 0, 0};
  const TheoreticalMoments t = theoretical_moments(x, free);
  CHECK(t.drift[0] == 0.0);
  CHECK(t.drift[3] == doctest::Approx(0.5));

  const ModelConfig planar = with_linear_density(scenario_free(1.0, 2.0, 2), 1.0, 1.0);
  const std::vector<double> x2{0.5, 0};
  const TheoreticalMoments t2 = theoretical_moments(x2, planar);
  const double g = 1.5;
  CHECK(t2.drift[0] == doctest::Approx(-(1.0 / (2 * g * g)) * (1.0 / g)));
  CHECK(t2.cov_at(0, 0) == doctest::Approx(1.0 / (g * g)));

  ModelConfig dense = scenario_heuristic();
  dense.density = DensitySpec::constant(2.0);
  CHECK(theoretical_moments(x, dense).drift[0] ==
        doctest::Approx(-(1.0 / (3 * 4.0)) * (2.0 * 1.0 / (2.0 * 0.5))));
}

TEST_CASE("free configuration moments are noise around the limit") {
  const ModelConfig free = scenario_free(1.0, 2.0);
  const std::vector<double> x{0.5, 0, 0};
  const ChainMoments m = estimate_chain_moments(x, with_scaling(free, 1e4), 20000, RngStream(31, 0));
  const TheoreticalMoments t = theoretical_moments(x, free);
  CHECK(m.failures == 0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(m.drift[i] - t.drift[i]) < 3.5 * m.drift_se[i]);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(m.cov_at(i, i) - t.cov_at(i, i)) < 3.5 * m.cov_se_at(i, i));
}

TEST_CASE("ladder time second moment decays like 1/n") {
  const ModelConfig c = scenario_heuristic();
  const std::vector<double> x{0.5, 0, 0};
  const std::vector<double> ns{1e2, 1e4, 1e6};
  const LadderResult lad = convergence_ladder(x, c, ns, 20000, RngStream(32, 0));
  REQUIRE(lad.rows.size() == 3);
  std::vector<double> tt;
  for (const auto& r : lad.rows) {
    tt.push_back(r.moments.cov_at(3, 3));
    // n E[(n^{-3/4} N)^2] with E[n^{1/2} N^2] -> 2 / (g^2 v^2) = 4.
    if (r.n >= 1e4) CHECK(std::abs(r.n * r.moments.cov_at(3, 3) - 4.0) < 3 * r.n * r.moments.cov_se_at(3, 3) + 0.05 * 4.0);
  }
  CHECK(std::abs(loglog_slope(ns, tt) + 1.0) < 0.15);
  // KS distance of n^{1/4} N against Exp(g v) is at the 5% noise level by n = 1e6.
  CHECK(lad.rows[2].ks_distance < 1.36 / std::sqrt(20000.0));

  std::ostringstream csv;
  write_ladder_csv(lad, csv);
  std::string header;
  std::getline(std::istringstream(csv.str()) >> std::ws, header);
  CHECK(header == "n,component,estimate,se,limit,abs_err");
  const auto names = ladder_component_names(3);
  CHECK(names.size() == 4 + 16);
  CHECK(names[0] == "drift_x1");
  CHECK(names[3] == "drift_t");
}

TEST_CASE("loglog slope") {
  const std::vector<double> x{1, 10, 100, 1000};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.5));
  CHECK(loglog_slope(x, y) == doctest::Approx(-0.5));
}

TEST_CASE("energy distance test") {
  RngStream rng(33, 0);
  auto sample = [&](std::size_t n, int d, double shift) {
    std::vector<std::vector<double>> s(n, std::vector<double>(static_cast<std::size_t>(d)));
    for (auto& p : s) {
      for (auto& v : p) v = rng.normal() + shift;
    }
    return s;
  };
  const auto a = sample(400, 3, 0.0), b = sample(400, 3, 0.0), c = sample(400, 3, 0.4);
  CHECK(energy_distance_test(a, b, 199, RngStream(1, 0)).p_value > 0.01);
  const auto shifted = energy_distance_test(a, c, 199, RngStream(1, 0));
  CHECK(shifted.p_value < 0.01);
  CHECK(shifted.p_value >= 1.0 / 200.0);
  CHECK(shifted.permutations == 199);

  const auto a1 = sample(500, 1, 0.0), c1 = sample(500, 1, 0.3);
  CHECK(energy_distance_test(a1, c1, 199, RngStream(2, 0)).p_value < 0.01);
  // Worker count does not change the result.
  const auto w1 = energy_distance_test(a, c, 99, RngStream(3, 0), 1);
  const auto w3 = energy_distance_test(a, c, 99, RngStream(3, 0), 3);
  CHECK(w1.statistic == w3.statistic);
  CHECK(w1.p_value == w3.p_value);
}

TEST_CASE("energy distance statistic matches a direct evaluation") {
  // a = {0, 1}, b = {3, 5}: E|X-Y| = 3.5, E|X-X'| = 0.5, E|Y-Y'| = 1 (V-statistics),
  // scaled by n m / (n + m) = 1.
  const std::vector<std::vector<double>> a{{0.0}, {1.0}}, b{{3.0}, {5.0}};
  CHECK(energy_distance_test(a, b, 0, RngStream(1, 0)).statistic == doctest::Approx(5.5));
  const std::vector<std::vector<double>> a2{{0.0, 0.0}, {1.0, 0.0}}, b2{{3.0, 0.0}, {5.0, 0.0}};
  CHECK(energy_distance_test(a2, b2, 0, RngStream(1, 0)).statistic == doctest::Approx(5.5).epsilon(1e-6));
}

TEST_CASE("mean comparison") {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8};
  const MeanComparison m = compare_means(a, b);
  CHECK(m.mean_a == 2.5);
  CHECK(m.mean_b == 5.0);
  CHECK(m.se_a == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(m.pooled_se == doctest::Approx(std::hypot(m.se_a, m.se_b)));
  CHECK(m.z == doctest::Approx(-2.5 / m.pooled_se));
}
