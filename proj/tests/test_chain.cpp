#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rflight/chain.hpp"
#include "rflight/collision.hpp"
#include "rflight/model.hpp"

using namespace rflight;

TEST_CASE("free flight displacement is exponential in distance") {
  const double n = 100.0;
  const ModelConfig c = with_scaling(scenario_free(1.0, 2.0), n);
  const std::vector<double> x{0.5, 0, 0};
  const RngStream root(21, 0);
  const int count = 50000;
  double s = 0, s2 = 0;
  for (int k = 0; k < count; ++k) {
    RngStream r = root.substream(k);
    const StepOutcome o = step(x, 0.0, c, r);
    const double dx = std::hypot(o.x[0] - x[0], o.x[1] - x[1], o.x[2] - x[2]);
    s += dx;
    s2 += dx * dx;
  }
  // Rate sqrt(n) in distance.
  const double mean = s / count;
  const double se = std::sqrt((s2 / count - mean * mean) / count);
  CHECK(std::abs(mean - 1.0 / std::sqrt(n)) < 3 * se);
}

TEST_CASE("time drift of one step") {
  const double n = 1e4;
  const ModelConfig c = with_scaling(scenario_heuristic(), n);
  const std::vector<double> x{0.5, 0, 0};
  const RngStream root(22, 0);
  const int count = 40000;
  double s = 0, s2 = 0;
  for (int k = 0; k < count; ++k) {
    RngStream r = root.substream(k);
    const double dt = n * step(x, 0.0, c, r).t_scaled;
    s += dt;
    s2 += dt * dt;
  }
  const double mean = s / count;
  const double se = std::sqrt((s2 / count - mean * mean) / count);
  CHECK(std::abs(mean - 1.0 / std::sqrt(0.5)) < 3 * se + 0.02);
}

TEST_CASE("replaying a record reproduces the next point") {
  const ModelConfig c = with_scaling(scenario_heuristic(), 100.0);
  const std::vector<double> x0{0.5, 0, 0};
  ChainOptions o;
  o.step_budget = 20;
  const ChainRun run = run_chain(x0, c, o, RngStream(23, 0));
  REQUIRE(run.records.size() == 21);
  for (std::size_t k = 0; k + 1 < run.records.size(); ++k) {
    const auto& r = run.records[k];
    const FreeTimeSample f = free_flight_for_target(r.x, r.u, c, r.target);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(f.flight.final_state.x[i] - run.records[k + 1].x[i]) < 1e-9);
    CHECK(f.N == doctest::Approx(r.N).epsilon(1e-12));
  }
  // Same seed, same chain.
  const ChainRun again = run_chain(x0, c, o, RngStream(23, 0));
  CHECK(again.last.x == run.last.x);
  CHECK(again.last.t_raw == run.last.t_raw);
}

TEST_CASE("band handling") {
  const ModelConfig c = with_scaling(scenario_heuristic(), 100.0);
  ChainOptions o;
  o.band = std::make_pair(0.6, 0.8);
  const std::vector<double> outside{0.5, 0, 0};
  const ChainRun r0 = run_chain(outside, c, o, RngStream(1, 0));
  REQUIRE(r0.tau);
  CHECK(*r0.tau == 0);
  CHECK(r0.flights == 0);
  CHECK(r0.stop_reason == StopReason::ExitedBand);

  o.band = std::make_pair(0.3, 0.7);
  o.step_budget = 100000;
  for (int seed = 0; seed < 20; ++seed) {
    const ChainRun r = run_chain(outside, c, o, RngStream(seed, 0));
    REQUIRE(r.tau);
    REQUIRE(r.iota);
    const double rl = norm(r.last.x);
    CHECK((rl < 0.3 || rl > 0.7));
    CHECK(*r.iota <= r.last.t_raw);
    CHECK(r.conservation.violations == 0);
  }
}

TEST_CASE("free chain spreads linearly in k") {
  const double n = 100.0;
  const ModelConfig c = with_scaling(scenario_free(1.0, 2.0), n);
  const std::vector<double> x0{0.5, 0, 0};
  ChainOptions o;
  o.step_budget = 40;
  o.snapshot_index = 10;
  o.keep_records = false;
  o.track_iota = false;
  const RngStream root(24, 0);
  const int reps = 5000;
  double s10 = 0, s40 = 0, q10 = 0, q40 = 0;
  for (int i = 0; i < reps; ++i) {
    const ChainRun r = run_chain(x0, c, o, root.substream(i));
    auto d2 = [&](const std::vector<double>& x) {
      return std::pow(x[0] - 0.5, 2) + x[1] * x[1] + x[2] * x[2];
    };
    const double a = d2(r.snapshot->x), b = d2(r.last.x);
    s10 += a;
    q10 += a * a;
    s40 += b;
    q40 += b * b;
  }
  // Exp steps of rate sqrt(n) have second moment 2/n; isotropic steps add.
  auto check = [&](double s, double q, double k) {
    const double mean = s / reps;
    const double se = std::sqrt((q / reps - mean * mean) / reps);
    CHECK(std::abs(mean - k * 2.0 / n) < 3 * se);
  };
  check(s10, q10, 10);
  check(s40, q40, 40);
}

TEST_CASE("continuous trajectory and the time process") {
  const ModelConfig c = with_scaling(scenario_heuristic(), 100.0);
  const std::vector<double> x0{0.5, 0, 0};
  ChainOptions o;
  o.step_budget = 30;
  const ChainRun run = run_chain(x0, c, o, RngStream(25, 0));
  TrajectoryReconstructor rec(run, c);
  for (const auto& r : run.records) CHECK(rec.position_at(r.t_raw) == r.x);
  CHECK(rec.state_at(rec.horizon()).energy == doctest::Approx(1.0).epsilon(1e-8));
  for (std::size_t k = 0; k + 1 < run.records.size(); ++k) {
    const double tk = run.records[k].t_scaled, tk1 = run.records[k + 1].t_scaled;
    CHECK(interpolated_time_process(run, static_cast<double>(k)) == tk);
    CHECK(interpolated_time_process(run, k + 0.5) == doctest::Approx(0.5 * (tk + tk1)));
    CHECK(inverse_time_process(run, tk) == doctest::Approx(static_cast<double>(k)));
  }
  // Free flights are piecewise linear.
  const ModelConfig f = with_scaling(scenario_free(1.0, 2.0), 100.0);
  const ChainRun fr = run_chain(x0, f, o, RngStream(26, 0));
  TrajectoryReconstructor frec(fr, f);
  const auto& a = fr.records[3];
  const auto& b = fr.records[4];
  const auto mid = frec.position_at(0.5 * (a.t_raw + b.t_raw));
  for (int i = 0; i < 3; ++i) CHECK(mid[i] == doctest::Approx(0.5 * (a.x[i] + b.x[i])).epsilon(1e-12));
}

TEST_CASE("chain jsonl has one line per record") {
  const ModelConfig c = with_scaling(scenario_heuristic(), 100.0);
  const std::vector<double> x0{0.5, 0, 0};
  ChainOptions o;
  o.step_budget = 5;
  const ChainRun run = run_chain(x0, c, o, RngStream(27, 0));
  std::ostringstream out;
  write_chain_jsonl(run, out);
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 6);
}
