#include "rflight/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "rflight/boundary.hpp"
#include "rflight/chain.hpp"
#include "rflight/collision.hpp"
#include "rflight/diffusion.hpp"
#include "rflight/errors.hpp"
#include "rflight/model.hpp"
#include "rflight/parallel.hpp"
#include "rflight/stats.hpp"

namespace rflight {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kBandLower = 0.3;
constexpr double kBandUpper = 0.7;
constexpr double kLaunchRadius = 0.5;
constexpr int kPermutations = 199;

struct MarginalData {
  std::size_t chain_failures = 0;
  std::vector<std::vector<double>> chain_x;  // X at min(floor(n t), tau)
  std::vector<double> chain_clock;           // scaled time at that index
  std::vector<double> chain_exit;            // tau / n
  std::vector<std::vector<double>> diff_x;   // state at min(t, tau)
  std::vector<double> diff_clock;            // A(min(t, tau))
  std::vector<double> diff_exit;             // tau
  double n = 0.0;
};

struct Context {
  AcceptanceOptions options;
  ConservationStats conservation;
  std::optional<LadderResult> ladder3;
  std::optional<LadderResult> ladder2;
  std::optional<MarginalData> marginal;

  RngStream root(int criterion) const {
    return RngStream(options.seed, static_cast<std::uint64_t>(criterion));
  }
  std::size_t count(std::size_t full, std::size_t floor = 50) const {
    const double c = std::round(static_cast<double>(full) * options.sample_scale);
    return std::max<std::size_t>(floor, static_cast<std::size_t>(c));
  }
};

std::vector<double> launch_point(int dim) {
  std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
  x[0] = kLaunchRadius;
  return x;
}

double exp_cdf(double rate, double t) { return t <= 0.0 ? 0.0 : -std::expm1(-rate * t); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

Json comparison_json(const MeanComparison& c) {
  Json j;
  j["mean_chain"] = c.mean_a;
  j["mean_diffusion"] = c.mean_b;
  j["pooled_se"] = c.pooled_se;
  j["z"] = c.z;
  return j;
}

// --- 1 ---------------------------------------------------------------------

CriterionResult hazard_identity(Context& ctx) {
  CriterionResult r;
  const ModelConfig cfg = with_scaling(scenario_heuristic(3), 1e2);
  const std::vector<double> radii{0.1, 0.3, 0.5, 0.7, 0.9};
  const std::size_t per_radius = ctx.count(2000, 20);
  const RngStream root = ctx.root(1);
  struct Sample {
    bool ok = false;
    double hazard = 0.0;
    FlightResult flight;
  };
  const std::size_t total = per_radius * radii.size();
  auto samples = parallel_map(total, ctx.options.workers, [&](std::size_t i) {
    Sample s;
    RngStream stream = root.substream(i);
    std::vector<double> x{radii[i / per_radius], 0.0, 0.0};
    try {
      StepOutcome out = step(x, 0.0, cfg, stream);
      s.hazard = out.flight.hazard;
      s.flight = std::move(out.flight);
      s.flight.segment = {};
      s.ok = true;
    } catch (const NumericError&) {
    }
    return s;
  });
  std::vector<double> hazards;
  std::size_t failures = 0;
  for (const auto& s : samples) {
    if (!s.ok) {
      ++failures;
      continue;
    }
    ctx.conservation.add(s.flight, cfg.numerics.invariant_tol);
    hazards.push_back(s.hazard);
  }
  const KsResult ks = ks_statistic(hazards, [](double t) { return exp_cdf(1.0, t); });
  r.passed = ks.p_value > 0.01 && failures == 0;
  r.metrics["flights"] = hazards.size();
  r.metrics["failures"] = failures;
  r.metrics["ks_statistic"] = ks.statistic;
  r.metrics["ks_p_value"] = ks.p_value;
  r.detail = "KS p=" + fmt(ks.p_value) + " over " + std::to_string(hazards.size()) +
             " flights, failures=" + std::to_string(failures);
  return r;
}

// --- 2 ---------------------------------------------------------------------

CriterionResult free_time_law(Context& ctx) {
  CriterionResult r;
  const ModelConfig base = scenario_heuristic(3);
  const auto x = launch_point(3);
  const std::size_t samples = ctx.count(10000, 20);
  const RngStream root = ctx.root(2);
  const double rate = base.g(kLaunchRadius) * speed(base, kLaunchRadius);
  std::map<double, double> distance;
  std::size_t failures = 0;
  for (double n : {1e2, 1e6}) {
    const ChainMoments m = estimate_chain_moments(x, with_scaling(base, n), samples, root,
                                                  ctx.options.workers);
    ctx.conservation.merge(m.conservation);
    failures += m.failures;
    distance[n] = ks_statistic(m.scaled_free_times, [rate](double t) {
                    return exp_cdf(rate, t);
                  }).statistic;
  }
  r.passed = distance[1e6] <= 0.02 && distance[1e6] < distance[1e2] && failures == 0;
  r.metrics["samples"] = samples;
  r.metrics["failures"] = failures;
  r.metrics["ks_distance_n1e2"] = distance[1e2];
  r.metrics["ks_distance_n1e6"] = distance[1e6];
  r.detail = "KS distance " + fmt(distance[1e6]) + " at n=1e6 vs " + fmt(distance[1e2]) +
             " at n=1e2";
  return r;
}

// --- 3, 4, 12 --------------------------------------------------------------

const LadderResult& ladder(Context& ctx, int dim) {
  auto& slot = dim == 3 ? ctx.ladder3 : ctx.ladder2;
  if (!slot) {
    const std::vector<double> ns{1e2, 1e4, 1e6};
    slot = convergence_ladder(launch_point(dim), scenario_heuristic(dim), ns,
                              ctx.count(100000, 200), ctx.root(dim == 3 ? 3 : 12),
                              ctx.options.workers);
    for (const auto& row : slot->rows) ctx.conservation.merge(row.moments.conservation);
  }
  return *slot;
}

CriterionResult drift_limit(Context& ctx) {
  CriterionResult r;
  const LadderResult& lad = ladder(ctx, 3);
  const LadderRow& first = lad.rows.front();
  const LadderRow& last = lad.rows.back();
  const auto names = ladder_component_names(3);
  bool ok = true;
  int worst = 0;
  double worst_z = 0.0;
  Json comps = Json::array();
  std::size_t failures = 0;
  for (const auto& row : lad.rows) failures += row.moments.failures;
  for (std::size_t i = 0; i < last.theory.drift.size(); ++i) {
    const double err_last = std::abs(last.moments.drift[i] - last.theory.drift[i]);
    const double err_first = std::abs(first.moments.drift[i] - first.theory.drift[i]);
    const double se_last = last.moments.drift_se[i];
    const double pooled = std::hypot(se_last, first.moments.drift_se[i]);
    const double z = err_last / se_last;
    const bool within = err_last <= 3.0 * se_last;
    const bool not_worse = err_last <= err_first + 2.0 * pooled;
    ok = ok && within && not_worse;
    if (z > worst_z) {
      worst_z = z;
      worst = static_cast<int>(i);
    }
    Json c;
    c["component"] = names[i];
    c["estimate"] = last.moments.drift[i];
    c["limit"] = last.theory.drift[i];
    c["se"] = se_last;
    c["abs_err_first"] = err_first;
    c["abs_err_final"] = err_last;
    c["within_3se"] = within;
    c["not_worse_than_first"] = not_worse;
    comps.push_back(c);
  }
  r.passed = ok && failures == 0;
  r.metrics["samples_per_rung"] = last.moments.count;
  r.metrics["failures"] = failures;
  r.metrics["components"] = comps;
  r.detail = "largest final |err|/SE " + fmt(worst_z) + " (" + names[worst] + ")";
  return r;
}

CriterionResult covariance_limit(Context& ctx) {
  CriterionResult r;
  const LadderResult& lad = ladder(ctx, 3);
  const LadderRow& last = lad.rows.back();
  const int d = 3;
  bool ok = true;
  double worst_z = 0.0;
  Json comps = Json::array();
  const auto names = ladder_component_names(d);
  for (int i = 0; i <= d; ++i) {
    for (int j = i; j <= d; ++j) {
      if (i == d && j == d) continue;  // time variance checked by its slope
      const double est = last.moments.cov_at(i, j);
      const double lim = last.theory.cov_at(i, j);
      const double se = last.moments.cov_se_at(i, j);
      const double z = std::abs(est - lim) / se;
      worst_z = std::max(worst_z, z);
      ok = ok && z <= 3.0;
      Json c;
      c["component"] = names[static_cast<std::size_t>(d + 1 + i * (d + 1) + j)];
      c["estimate"] = est;
      c["limit"] = lim;
      c["se"] = se;
      c["z"] = z;
      comps.push_back(c);
    }
  }
  std::vector<double> ns, tt;
  for (const auto& row : lad.rows) {
    ns.push_back(row.n);
    tt.push_back(row.moments.cov_at(d, d));
  }
  // n E[dT^2] = n^{-1/2} E[N^2] and E[N^2] is itself of order n^{-1/2}.
  const double slope_target = -1.0;
  const double slope = loglog_slope(ns, tt);
  const bool slope_ok = std::abs(slope - slope_target) <= 0.15;
  r.passed = ok && slope_ok;
  r.metrics["components"] = comps;
  r.metrics["time_variance"] = tt;
  r.metrics["time_variance_slope"] = slope;
  r.metrics["time_variance_slope_target"] = slope_target;
  r.detail = "largest |err|/SE " + fmt(worst_z) + ", time-variance slope " + fmt(slope);
  return r;
}

CriterionResult dimension_two(Context& ctx) {
  CriterionResult r;
  const LadderResult& lad = ladder(ctx, 2);
  const LadderRow& last = lad.rows.back();
  const ModelConfig cfg = scenario_heuristic(2);
  const double g = cfg.g(kLaunchRadius);
  const double two_over_d = 2.0 / (2.0 * g * g);
  const double d_minus_one_over_d = 1.0 / (2.0 * g * g);
  bool match_a = true, match_b = true;
  Json diag = Json::array();
  for (int i = 0; i < 2; ++i) {
    const double est = last.moments.cov_at(i, i);
    const double se = last.moments.cov_se_at(i, i);
    match_a = match_a && std::abs(est - two_over_d) <= 3.0 * se;
    match_b = match_b && std::abs(est - d_minus_one_over_d) <= 3.0 * se;
    Json c;
    c["estimate"] = est;
    c["se"] = se;
    diag.push_back(c);
  }
  std::string resolved = "none";
  if (match_a && !match_b) resolved = "2/d";
  if (match_b && !match_a) resolved = "(d-1)/d";
  if (match_a && match_b) resolved = "ambiguous";
  r.passed = match_a != match_b;
  r.metrics["diagonal"] = diag;
  r.metrics["candidate_2_over_d"] = two_over_d;
  r.metrics["candidate_d_minus_1_over_d"] = d_minus_one_over_d;
  r.metrics["resolved_convention"] = resolved;
  r.detail = "d=2 diagonal " + fmt(last.moments.cov_at(0, 0)) + ", " +
             fmt(last.moments.cov_at(1, 1)) + " resolves to " + resolved;
  return r;
}

// --- 5, 6, 7 ---------------------------------------------------------------

const MarginalData& marginal(Context& ctx) {
  if (ctx.marginal) return *ctx.marginal;
  MarginalData m;
  m.n = 1e4;
  const double t = 0.1;
  const ModelConfig base = scenario_heuristic(3);
  const ModelConfig cfg = with_scaling(base, m.n);
  const auto x0 = launch_point(3);
  const std::size_t replicas = ctx.count(5000, 100);
  const auto band = std::make_pair(kBandLower, kBandUpper);
  const auto snapshot_index = static_cast<std::size_t>(std::floor(m.n * t));

  ChainOptions co;
  co.band = band;
  co.keep_records = false;
  co.track_iota = false;
  co.snapshot_index = snapshot_index;
  co.step_budget = 100000000;
  const RngStream chain_root = ctx.root(5);
  auto runs = parallel_map(replicas, ctx.options.workers, [&](std::size_t i) {
    return run_chain(x0, cfg, co, chain_root.substream(i));
  });
  for (const auto& run : runs) {
    ctx.conservation.merge(run.conservation);
    if (run.stop_reason != StopReason::ExitedBand || !run.tau) {
      ++m.chain_failures;
      continue;
    }
    const ReflectionRecord& at = *run.tau <= snapshot_index ? run.last : *run.snapshot;
    m.chain_x.push_back(at.x);
    m.chain_clock.push_back(at.t_scaled);
    m.chain_exit.push_back(static_cast<double>(*run.tau) / m.n);
  }

  DiffusionOptions dopt;
  dopt.dt = 1e-4;
  dopt.band = band;
  dopt.snapshot_time = t;
  const RngStream diff_root = ctx.root(6);
  auto paths = parallel_map(replicas, ctx.options.workers, [&](std::size_t i) {
    RngStream s = diff_root.substream(i);
    return simulate_G(x0, base, dopt, s);
  });
  for (const auto& p : paths) {
    m.diff_x.push_back(*p.snapshot);
    m.diff_clock.push_back(p.snapshot_A);
    m.diff_exit.push_back(*p.exit_time);
  }
  ctx.marginal = std::move(m);
  return *ctx.marginal;
}

CriterionResult marginal_agreement(Context& ctx) {
  CriterionResult r;
  const MarginalData& m = marginal(ctx);
  bool ok = m.chain_failures == 0;
  double worst = 0.0;
  Json comps = Json::array();
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> a, b;
    for (const auto& x : m.chain_x) a.push_back(x[k]);
    for (const auto& x : m.diff_x) b.push_back(x[k]);
    const MeanComparison c = compare_means(a, b);
    worst = std::max(worst, std::abs(c.z));
    ok = ok && std::abs(c.z) <= 3.0;
    comps.push_back(comparison_json(c));
  }
  const EnergyDistanceResult ed =
      energy_distance_test(m.chain_x, m.diff_x, kPermutations, ctx.root(50), ctx.options.workers);
  ok = ok && ed.p_value > 0.01;
  r.passed = ok;
  r.metrics["replicas"] = m.chain_x.size();
  r.metrics["chain_failures"] = m.chain_failures;
  r.metrics["components"] = comps;
  r.metrics["energy_statistic"] = ed.statistic;
  r.metrics["energy_p_value"] = ed.p_value;
  r.detail = "largest |z| " + fmt(worst) + ", energy-distance p=" + fmt(ed.p_value);
  return r;
}

CriterionResult exit_time_agreement(Context& ctx) {
  CriterionResult r;
  const MarginalData& m = marginal(ctx);
  const MeanComparison c = compare_means(m.chain_exit, m.diff_exit);
  r.passed = std::abs(c.z) <= 3.0 && m.chain_failures == 0;
  r.metrics = comparison_json(c);
  r.detail = "mean tau/n " + fmt(c.mean_a) + " vs " + fmt(c.mean_b) + ", z=" + fmt(c.z);
  return r;
}

CriterionResult clock_agreement(Context& ctx) {
  CriterionResult r;
  const MarginalData& m = marginal(ctx);
  const MeanComparison c = compare_means(m.chain_clock, m.diff_clock);
  r.passed = std::abs(c.z) <= 3.0 && m.chain_failures == 0;
  r.metrics = comparison_json(c);
  r.detail = "mean clock " + fmt(c.mean_a) + " vs " + fmt(c.mean_b) + ", z=" + fmt(c.z);
  return r;
}

// --- 8 ---------------------------------------------------------------------

CriterionResult time_change(Context& ctx) {
  CriterionResult r;
  const ModelConfig cfg = scenario_heuristic(3);
  const auto x0 = launch_point(3);
  const double t = 0.05;
  const std::size_t paths = ctx.count(5000, 100);
  const auto band = std::make_pair(kBandLower, kBandUpper);

  DiffusionOptions g_opt;
  g_opt.dt = 1e-4;
  g_opt.band = band;
  g_opt.clock_horizon = t;
  g_opt.record_path = true;
  const RngStream g_root = ctx.root(8);
  auto changed = parallel_map(paths, ctx.options.workers, [&](std::size_t i) {
    RngStream s = g_root.substream(i);
    const DiffusionPath p = simulate_G(x0, cfg, g_opt, s);
    if (p.final_A < t) return p.final_state;  // killed before natural time t
    return path_state_at(p, time_change_Omega(p, t));
  });

  DiffusionOptions n_opt;
  n_opt.dt = 1e-4;
  n_opt.band = band;
  n_opt.horizon = t;
  const RngStream n_root = ctx.root(80);
  auto direct = parallel_map(paths, ctx.options.workers, [&](std::size_t i) {
    RngStream s = n_root.substream(i);
    return simulate_natural(x0, cfg, n_opt, s).final_state;
  });

  Json comps = Json::array();
  double worst = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> a, b;
    for (const auto& x : changed) a.push_back(x[k]);
    for (const auto& x : direct) b.push_back(x[k]);
    const MeanComparison c = compare_means(a, b);
    worst = std::max(worst, std::abs(c.z));
    comps.push_back(comparison_json(c));
  }
  const EnergyDistanceResult ed =
      energy_distance_test(changed, direct, kPermutations, ctx.root(81), ctx.options.workers);
  r.passed = ed.p_value > 0.01;
  r.metrics["paths"] = paths;
  r.metrics["components"] = comps;
  r.metrics["energy_statistic"] = ed.statistic;
  r.metrics["energy_p_value"] = ed.p_value;
  r.detail = "energy-distance p=" + fmt(ed.p_value) + ", largest mean |z| " + fmt(worst);
  return r;
}

// --- 9 ---------------------------------------------------------------------

CriterionResult boundary_classification(Context&) {
  CriterionResult r;
  struct Case {
    ModelConfig config;
    bool check_upper;
  };
  const std::vector<Case> cases{{scenario_constant_force(1.0, 1.0), true},
                                {scenario_newtonian(1.0, 1.0), true},
                                {scenario_harmonic(1.0, 4.0), false}};
  bool ok = true;
  Json reports = Json::array();
  std::string detail;
  for (const auto& c : cases) {
    const BoundaryReport rep = classify_boundaries(c.config);
    bool case_ok = rep.endpoints[0].classification == Accessibility::Inaccessible;
    if (c.check_upper) {
      case_ok = case_ok && rep.endpoints[1].classification == Accessibility::Inaccessible;
    }
    ok = ok && case_ok;
    reports.push_back(to_json(rep));
    if (!detail.empty()) detail += "; ";
    detail += c.config.name + (case_ok ? " ok" : " WRONG");
  }
  r.passed = ok;
  r.metrics["reports"] = reports;
  r.detail = detail;
  return r;
}

// --- 10 --------------------------------------------------------------------

CriterionResult hitting_cross_check(Context& ctx) {
  CriterionResult r;
  const std::size_t paths = ctx.count(10000, 100);
  DiffusionOptions opt;
  opt.dt = 1e-5;
  opt.band = std::make_pair(kBandLower, kBandUpper);
  bool ok = true;
  std::string detail;
  Json cases = Json::array();
  int idx = 0;
  for (const ModelConfig& cfg : {scenario_heuristic(3), scenario_free()}) {
    const double p = hitting_probability(cfg, kLaunchRadius, kBandLower, kBandUpper);
    const RngStream root = ctx.root(100 + idx++);
    auto sides = parallel_map(paths, ctx.options.workers, [&](std::size_t i) {
      RngStream s = root.substream(i);
      return simulate_Gr(kLaunchRadius, cfg, opt, s).exit_side;
    });
    const auto upper = static_cast<double>(std::count(sides.begin(), sides.end(), 1));
    const double freq = upper / static_cast<double>(paths);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(paths));
    const double z = (freq - p) / se;
    ok = ok && std::abs(z) <= 3.0;
    Json c;
    c["scenario"] = cfg.name;
    c["scale_probability"] = p;
    c["frequency"] = freq;
    c["se"] = se;
    c["z"] = z;
    cases.push_back(c);
    if (!detail.empty()) detail += "; ";
    detail += cfg.name + " " + fmt(freq) + " vs " + fmt(p) + " (z=" + fmt(z) + ")";
  }
  r.passed = ok;
  r.metrics["paths"] = paths;
  r.metrics["cases"] = cases;
  r.detail = detail;
  return r;
}

// --- 11 --------------------------------------------------------------------

CriterionResult conservation_suite(Context& ctx) {
  CriterionResult r;
  // Dedicated sweep over the scenario library on top of every flight above.
  struct Case {
    ModelConfig config;
    double r0;
  };
  const std::vector<Case> cases{{with_scaling(scenario_heuristic(3), 1e2), 0.5},
                                {with_scaling(scenario_heuristic(3), 1e2), 0.95},
                                {with_scaling(scenario_newtonian(1.0, 1.0), 1e2), 0.5},
                                {with_scaling(scenario_harmonic(1.0, 4.0), 1e2), 1.0},
                                {with_scaling(scenario_free(), 1e2), 0.5},
                                {with_scaling(with_linear_density(scenario_heuristic(3), 1.0),
                                              1e2),
                                 0.5}};
  const std::size_t per_case = ctx.count(1000, 50);
  ConservationStats sweep;
  std::size_t failures = 0;
  int idx = 0;
  for (const auto& c : cases) {
    const RngStream root = ctx.root(110 + idx++);
    std::vector<double> x{c.r0, 0.0, 0.0};
    const ChainMoments m = estimate_chain_moments(x, c.config, per_case, root, ctx.options.workers);
    sweep.merge(m.conservation);
    failures += m.failures;
  }
  ConservationStats total = ctx.conservation;
  total.merge(sweep);
  r.passed = total.violations == 0 && failures == 0;
  r.metrics["flights"] = total.flights;
  r.metrics["violations"] = total.violations;
  r.metrics["max_energy_drift"] = total.max_energy_drift;
  r.metrics["max_angular_momentum_drift"] = total.max_L_drift;
  r.metrics["sweep_failures"] = failures;
  r.detail = std::to_string(total.flights) + " flights, " + std::to_string(total.violations) +
             " violations, max drift E " + fmt(total.max_energy_drift) + " L " +
             fmt(total.max_L_drift);
  return r;
}

using Runner = CriterionResult (*)(Context&);

const std::map<int, std::pair<std::string, Runner>>& registry() {
  static const std::map<int, std::pair<std::string, Runner>> table{
      {1, {"hazard identity", hazard_identity}},
      {2, {"free-time limit law", free_time_law}},
      {3, {"drift limit", drift_limit}},
      {4, {"covariance limit", covariance_limit}},
      {5, {"chain to diffusion marginal", marginal_agreement}},
      {6, {"exit-time convergence", exit_time_agreement}},
      {7, {"clock convergence", clock_agreement}},
      {8, {"time-change equivalence", time_change}},
      {9, {"boundary classification", boundary_classification}},
      {10, {"hitting-probability cross-check", hitting_cross_check}},
      {11, {"conservation suite", conservation_suite}},
      {12, {"dimension generalization", dimension_two}},
  };
  return table;
}

CriterionResult run_one(int id, Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  const auto& entry = registry().at(id);
  try {
    r = entry.second(ctx);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.id = id;
  r.name = entry.first;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<CriterionResult> run_set(const std::vector<int>& ids, const AcceptanceOptions& options,
                                     const std::function<void(const CriterionResult&)>& progress) {
  Context ctx;
  ctx.options = options;
  std::vector<CriterionResult> out;
  // Criterion 11 aggregates the flights of all others, so it runs last.
  std::vector<int> order;
  for (int id : ids) {
    if (id != 11) order.push_back(id);
  }
  if (std::find(ids.begin(), ids.end(), 11) != ids.end()) order.push_back(11);
  for (int id : order) {
    out.push_back(run_one(id, ctx));
    if (progress) progress(out.back());
  }
  std::sort(out.begin(), out.end(),
            [](const CriterionResult& a, const CriterionResult& b) { return a.id < b.id; });
  return out;
}

}  // namespace

std::vector<int> all_criteria() {
  std::vector<int> ids;
  for (int i = 1; i <= 13; ++i) ids.push_back(i);
  return ids;
}

std::string criterion_name(int id) {
  if (id == 13) return "determinism";
  const auto& reg = registry();
  const auto it = reg.find(id);
  if (it == reg.end()) throw DomainError("unknown criterion " + std::to_string(id));
  return it->second.first;
}

bool AcceptanceReport::all_passed() const {
  return std::all_of(results.begin(), results.end(),
                     [](const CriterionResult& r) { return r.passed; });
}

nlohmann::ordered_json AcceptanceReport::summary() const {
  Json j;
  j["seed"] = seed;
  j["sample_scale"] = sample_scale;
  j["all_passed"] = all_passed();
  j["criteria"] = Json::array();
  for (const auto& r : results) {
    Json c;
    c["id"] = r.id;
    c["name"] = r.name;
    c["passed"] = r.passed;
    c["detail"] = r.detail;
    c["metrics"] = r.metrics;
    j["criteria"].push_back(c);
  }
  return j;
}

nlohmann::ordered_json AcceptanceReport::timing() const {
  Json j = Json::array();
  for (const auto& r : results) {
    Json c;
    c["id"] = r.id;
    c["seconds"] = r.seconds;
    j.push_back(c);
  }
  return j;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << ": " << r.detail;
  return s.str();
}

AcceptanceReport run_acceptance(const AcceptanceOptions& options,
                                const std::function<void(const CriterionResult&)>& progress) {
  std::vector<int> ids = options.criteria.empty() ? all_criteria() : options.criteria;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (int id : ids) criterion_name(id);
  const bool determinism = std::find(ids.begin(), ids.end(), 13) != ids.end();
  std::vector<int> base;
  for (int id : ids) {
    if (id != 13) base.push_back(id);
  }
  if (determinism && base.empty()) base = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};

  AcceptanceReport report;
  report.seed = options.seed;
  report.sample_scale = options.sample_scale;
  std::vector<CriterionResult> first = run_set(base, options, progress);
  for (const auto& r : first) {
    if (std::find(ids.begin(), ids.end(), r.id) != ids.end()) report.results.push_back(r);
  }

  if (determinism) {
    const auto start = std::chrono::steady_clock::now();
    AcceptanceOptions alt = options;
    alt.workers = options.workers == options.determinism_workers ? 1 : options.determinism_workers;
    AcceptanceReport a, b;
    a.seed = b.seed = options.seed;
    a.sample_scale = b.sample_scale = options.sample_scale;
    a.results = first;
    b.results = run_set(base, alt, {});
    const std::string da = a.summary().dump();
    const std::string db = b.summary().dump();
    CriterionResult r;
    r.id = 13;
    r.name = criterion_name(13);
    r.passed = da == db;
    r.metrics["summary_bytes"] = da.size();
    r.metrics["criteria_compared"] = base;
    r.detail = std::string(r.passed ? "identical" : "DIFFERENT") + " summaries (" +
               std::to_string(da.size()) + " bytes) across worker counts";
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (progress) progress(r);
    report.results.push_back(r);
  }
  return report;
}

}  // namespace rflight
