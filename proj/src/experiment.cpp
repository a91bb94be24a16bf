#include "rflight/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "rflight/boundary.hpp"
#include "rflight/chain.hpp"
#include "rflight/diffusion.hpp"
#include "rflight/errors.hpp"
#include "rflight/parallel.hpp"
#include "rflight/stats.hpp"
#include "rflight/verify.hpp"

namespace rflight {

namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

// 1-based line of the first occurrence of "key" in the source text.
std::optional<int> line_of(const std::string& text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  const auto pos = text.find(quoted);
  if (pos == std::string::npos) return std::nullopt;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

/*
 * Strict view of one JSON object: every key must be consumed by a getter
 * before finish(), so unknown keys are reported.
 */
class Fields {
 public:
  Fields(const Json& obj, std::string path, const std::string& text)
      : obj_(obj), path_(std::move(path)), text_(text) {
    if (!obj_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    std::string msg = "field '" + field + "'";
    const auto leaf = field.substr(field.find_last_of('.') + 1);
    if (const auto line = line_of(text_, leaf)) msg += " (line " + std::to_string(*line) + ")";
    throw ConfigError(msg + ": " + what);
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const Json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    return &*it;
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  std::optional<double> number(const std::string& key) {
    const Json* j = get(key);
    if (!j) return std::nullopt;
    if (!j->is_number()) fail(field(key), "expected a number");
    return j->get<double>();
  }

  double number(const std::string& key, double fallback) { return number(key).value_or(fallback); }

  // Number or null (null meaning +infinity).
  double number_or_infinity(const std::string& key, double fallback) {
    const Json* j = get(key);
    if (!j) return fallback;
    if (j->is_null()) return kInfinity;
    if (!j->is_number()) fail(field(key), "expected a number or null");
    return j->get<double>();
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const Json* j = get(key);
    if (!j) return std::nullopt;
    if (j->is_number_integer()) return j->get<std::int64_t>();
    if (j->is_number_float()) {
      const double v = j->get<double>();
      if (std::floor(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
    }
    fail(field(key), "expected an integer");
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t minimum = 1) {
    const auto v = integer(key);
    if (!v) return fallback;
    if (*v < static_cast<std::int64_t>(minimum)) {
      fail(field(key), "must be at least " + std::to_string(minimum));
    }
    return static_cast<std::size_t>(*v);
  }

  std::optional<bool> boolean(const std::string& key) {
    const Json* j = get(key);
    if (!j) return std::nullopt;
    if (!j->is_boolean()) fail(field(key), "expected true or false");
    return j->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const Json* j = get(key);
    if (!j) return std::nullopt;
    if (!j->is_string()) fail(field(key), "expected a string");
    return j->get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    const Json* j = get(key);
    if (!j) return std::nullopt;
    if (!j->is_array()) fail(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *j) {
      if (!e.is_number()) fail(field(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::optional<Fields> object(const std::string& key) {
    const Json* j = get(key);
    if (!j) return std::nullopt;
    if (!j->is_object()) fail(field(key), "expected an object");
    return Fields(*j, field(key), text_);
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) fail(field(key), "unknown key");
    }
  }

 private:
  const Json& obj_;
  std::string path_;
  const std::string& text_;
  std::set<std::string> seen_;
};

void require(bool ok, Fields& f, const std::string& key, const std::string& what) {
  if (!ok) f.fail(f.field(key), what);
}

DensityConfig parse_density(Fields f) {
  DensityConfig d;
  d.kind = f.string("kind").value_or("constant");
  d.g0 = f.number("g0", 1.0);
  d.beta = f.number("beta", 0.0);
  d.expression = f.string("expression").value_or("");
  if (d.kind != "constant" && d.kind != "linear" && d.kind != "expression") {
    f.fail(f.field("kind"), "expected constant, linear or expression");
  }
  require(d.kind != "expression" || !d.expression.empty(), f, "expression",
          "required for an expression density");
  require(d.g0 > 0.0, f, "g0", "must be positive");
  f.finish();
  return d;
}

ScenarioConfig parse_scenario(Fields f) {
  ScenarioConfig s;
  s.name = f.string("name").value_or(s.name);
  const auto names = scenario_names();
  if (s.name != "custom" && std::find(names.begin(), names.end(), s.name) == names.end()) {
    f.fail(f.field("name"), "unknown scenario '" + s.name + "'");
  }
  if (auto p = f.object("params")) {
    for (const auto& key : {"C", "k", "a", "E", "m", "beta", "g0"}) {
      if (auto v = p->number(key)) s.params[key] = *v;
    }
    p->finish();
  }
  if (auto d = f.integer("dim")) {
    require(*d >= 2 && *d <= 16, f, "dim", "must be between 2 and 16");
    s.dim = static_cast<int>(*d);
  }
  if (auto d = f.object("density")) s.density = parse_density(*d);
  const bool custom = s.name == "custom";
  for (const auto& key : {"potential", "singular_at_origin", "mass", "energy", "search",
                          "seed_radius"}) {
    if (!custom && f.has(key)) f.fail(f.field(key), "only allowed for the custom scenario");
  }
  if (custom) {
    auto pot = f.string("potential");
    if (!pot) f.fail(f.field("potential"), "required for the custom scenario");
    s.potential = *pot;
    s.singular_at_origin = f.boolean("singular_at_origin").value_or(false);
    s.mass = f.number("mass", s.mass);
    s.energy = f.number("energy", s.energy);
    require(s.mass > 0.0, f, "mass", "must be positive");
    if (const Json* j = f.get("search")) {
      if (!j->is_array() || j->size() != 2 || !(*j)[0].is_number() ||
          !((*j)[1].is_number() || (*j)[1].is_null())) {
        f.fail(f.field("search"), "expected [lower, upper] with upper a number or null");
      }
      s.search_lower = (*j)[0].get<double>();
      s.search_upper = (*j)[1].is_null() ? kInfinity : (*j)[1].get<double>();
    }
    s.seed_radius = f.number("seed_radius", s.seed_radius);
  }
  f.finish();
  return s;
}

Numerics parse_numerics(Fields f) {
  Numerics n;
  auto positive = [&](const char* key, double& slot) {
    if (auto v = f.number(key)) {
      require(*v > 0.0, f, key, "must be positive");
      slot = *v;
    }
  };
  positive("abs_tol", n.abs_tol);
  positive("rel_tol", n.rel_tol);
  positive("origin_eps", n.origin_eps);
  positive("v_cap", n.v_cap);
  positive("t_max", n.t_max);
  positive("invariant_tol", n.invariant_tol);
  positive("singular_eps", n.singular_eps);
  positive("r_max", n.r_max);
  n.validation_grid = f.count("validation_grid", n.validation_grid, 10);
  f.finish();
  return n;
}

void parse_conventions(Fields f, ExperimentConfig& c) {
  if (auto r = f.string("radial")) {
    if (*r == "ito") {
      c.radial = RadialConvention::Ito;
    } else if (*r == "as_printed") {
      c.radial = RadialConvention::AsPrinted;
    } else {
      f.fail(f.field("radial"), "expected ito or as_printed");
    }
  }
  if (auto v = f.string("covariance")) {
    if (*v == "two_over_d") {
      c.covariance = CovarianceConvention::TwoOverD;
    } else if (*v == "d_minus_one_over_d") {
      c.covariance = CovarianceConvention::DMinusOneOverD;
    } else {
      f.fail(f.field("covariance"), "expected two_over_d or d_minus_one_over_d");
    }
  }
  f.finish();
}

std::optional<std::string> parse_expectation(Fields& f, const char* key) {
  auto v = f.string(key);
  if (v && *v != "accessible" && *v != "inaccessible") {
    f.fail(f.field(key), "expected accessible or inaccessible");
  }
  return v;
}

OJson infinity_as_null(double v) { return std::isfinite(v) ? OJson(v) : OJson(nullptr); }

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SimulateChain:
      return "simulate-chain";
    case ExperimentKind::SimulateTrajectory:
      return "simulate-trajectory";
    case ExperimentKind::SimulateDiffusion:
      return "simulate-diffusion";
    case ExperimentKind::Ladder:
      return "ladder";
    case ExperimentKind::ClassifyBoundary:
      return "classify-boundary";
    case ExperimentKind::Verify:
      return "verify";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::SimulateChain, ExperimentKind::SimulateTrajectory,
                 ExperimentKind::SimulateDiffusion, ExperimentKind::Ladder,
                 ExperimentKind::ClassifyBoundary, ExperimentKind::Verify}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

std::vector<double> ExperimentConfig::launch_point() const {
  if (x0) return *x0;
  std::vector<double> x(static_cast<std::size_t>(scenario.dim), 0.0);
  x[0] = r0;
  return x;
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentKind kind) {
  Json root;
  try {
    root = Json::parse(text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const auto begin = text.begin();
    const int line = 1 + static_cast<int>(std::count(begin, begin + static_cast<long>(byte), '\n'));
    throw ConfigError("malformed JSON at line " + std::to_string(line) + ": " + e.what());
  }
  ExperimentConfig c;
  c.kind = kind;
  Fields f(root, "", text);
  if (auto e = f.string("experiment")) {
    if (*e != to_string(kind)) {
      f.fail("experiment", "'" + *e + "' does not match the subcommand " + to_string(kind));
    }
  }
  const Json* seed = f.get("seed");
  if (!seed) throw ConfigError("field 'seed': missing (a seed is mandatory)");
  if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0)) {
    f.fail("seed", "expected a non-negative integer");
  }
  c.seed = seed->get<std::uint64_t>();
  if (auto s = f.object("scenario")) c.scenario = parse_scenario(*s);
  if (auto s = f.object("conventions")) parse_conventions(*s, c);
  if (auto s = f.object("numerics")) c.numerics = parse_numerics(*s);
  if (auto n = f.number("n")) {
    require(*n >= 1.0, f, "n", "must be at least 1");
    c.n = *n;
  }
  c.x0 = f.numbers("x0");
  if (c.x0 && static_cast<int>(c.x0->size()) != c.scenario.dim) {
    f.fail("x0", "length must equal scenario.dim");
  }
  if (auto r = f.number("r0")) {
    require(*r > 0.0, f, "r0", "must be positive");
    c.r0 = *r;
  }
  if (const Json* b = f.get("band"); b && !b->is_null()) {
    if (!b->is_array() || b->size() != 2 || !(*b)[0].is_number() || !(*b)[1].is_number() ||
        !((*b)[0].get<double>() < (*b)[1].get<double>())) {
      f.fail("band", "expected [l, u] with l < u");
    }
    c.band = std::make_pair((*b)[0].get<double>(), (*b)[1].get<double>());
  }
  if (auto w = f.integer("workers")) {
    require(*w >= 1, f, "workers", "must be at least 1");
    c.workers = static_cast<int>(*w);
  }
  c.output = f.string("output").value_or(c.output);
  if (auto s = f.object("chain")) {
    c.chain.steps = s->count("steps", c.chain.steps);
    c.chain.replicas = s->count("replicas", c.chain.replicas);
    s->finish();
  }
  if (auto s = f.object("trajectory")) {
    c.trajectory.points = s->count("points", c.trajectory.points, 2);
    s->finish();
  }
  if (auto s = f.object("diffusion")) {
    auto& d = c.diffusion;
    d.process = s->string("process").value_or(d.process);
    if (d.process != "G" && d.process != "Gr" && d.process != "natural") {
      s->fail(s->field("process"), "expected G, Gr or natural");
    }
    d.dt = s->number("dt", d.dt);
    require(d.dt > 0.0, *s, "dt", "must be positive");
    d.horizon = s->number_or_infinity("horizon", d.horizon);
    require(d.horizon > 0.0, *s, "horizon", "must be positive");
    d.paths = s->count("paths", d.paths);
    if (const Json* t = s->get("snapshot_time"); t && !t->is_null()) {
      if (!t->is_number() || !(t->get<double>() > 0.0)) {
        s->fail(s->field("snapshot_time"), "expected a positive number or null");
      }
      d.snapshot_time = t->get<double>();
    }
    d.record_paths = s->count("record_paths", d.record_paths, 0);
    s->finish();
  }
  if (auto s = f.object("ladder")) {
    if (auto ns = s->numbers("n_values")) {
      require(!ns->empty(), *s, "n_values", "must not be empty");
      for (std::size_t i = 0; i < ns->size(); ++i) {
        require((*ns)[i] >= 1.0 && (i == 0 || (*ns)[i] > (*ns)[i - 1]), *s, "n_values",
                "must be increasing values >= 1");
      }
      c.ladder.n_values = *ns;
    }
    c.ladder.samples = s->count("samples", c.ladder.samples, 20);
    s->finish();
  }
  if (auto s = f.object("boundary")) {
    c.boundary.expect_lower = parse_expectation(*s, "expect_lower");
    c.boundary.expect_upper = parse_expectation(*s, "expect_upper");
    s->finish();
  }
  if (auto s = f.object("verify")) {
    if (const Json* ids = s->get("criteria")) {
      if (!ids->is_array()) s->fail(s->field("criteria"), "expected an array of integers");
      for (const auto& e : *ids) {
        if (!e.is_number_integer() || e.get<int>() < 1 || e.get<int>() > 13) {
          s->fail(s->field("criteria"), "entries must be integers in 1..13");
        }
        c.verify.criteria.push_back(e.get<int>());
      }
    }
    c.verify.sample_scale = s->number("sample_scale", c.verify.sample_scale);
    require(c.verify.sample_scale > 0.0, *s, "sample_scale", "must be positive");
    if (auto w = s->integer("determinism_workers")) {
      require(*w >= 1, *s, "determinism_workers", "must be at least 1");
      c.verify.determinism_workers = static_cast<int>(*w);
    }
    s->finish();
  }
  f.finish();
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path, ExperimentKind kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config_text(buffer.str(), kind);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json resolved_json(const ExperimentConfig& c) {
  OJson j;
  j["experiment"] = to_string(c.kind);
  j["seed"] = c.seed;
  OJson s;
  s["name"] = c.scenario.name;
  s["params"] = OJson::object();
  for (const auto& [k, v] : c.scenario.params) s["params"][k] = v;
  s["dim"] = c.scenario.dim;
  if (c.scenario.density) {
    OJson d;
    d["kind"] = c.scenario.density->kind;
    d["g0"] = c.scenario.density->g0;
    d["beta"] = c.scenario.density->beta;
    d["expression"] = c.scenario.density->expression;
    s["density"] = d;
  }
  if (c.scenario.name == "custom") {
    s["potential"] = c.scenario.potential;
    s["singular_at_origin"] = c.scenario.singular_at_origin;
    s["mass"] = c.scenario.mass;
    s["energy"] = c.scenario.energy;
    s["search"] = {c.scenario.search_lower, infinity_as_null(c.scenario.search_upper)};
    s["seed_radius"] = c.scenario.seed_radius;
  }
  j["scenario"] = s;
  j["conventions"] = {{"radial", to_string(c.radial)}, {"covariance", to_string(c.covariance)}};
  const Numerics& n = c.numerics;
  j["numerics"] = {{"abs_tol", n.abs_tol},         {"rel_tol", n.rel_tol},
                   {"origin_eps", n.origin_eps},   {"v_cap", n.v_cap},
                   {"t_max", n.t_max},             {"invariant_tol", n.invariant_tol},
                   {"validation_grid", n.validation_grid},
                   {"singular_eps", n.singular_eps}, {"r_max", n.r_max}};
  j["n"] = c.n;
  j["x0"] = c.launch_point();
  j["r0"] = c.r0;
  if (c.band) {
    j["band"] = {c.band->first, c.band->second};
  } else {
    j["band"] = nullptr;
  }
  j["chain"] = {{"steps", c.chain.steps}, {"replicas", c.chain.replicas}};
  j["trajectory"] = {{"points", c.trajectory.points}};
  const auto& d = c.diffusion;
  j["diffusion"] = {{"process", d.process},
                    {"dt", d.dt},
                    {"horizon", infinity_as_null(d.horizon)},
                    {"paths", d.paths},
                    {"snapshot_time", d.snapshot_time ? OJson(*d.snapshot_time) : OJson(nullptr)},
                    {"record_paths", d.record_paths}};
  j["ladder"] = {{"n_values", c.ladder.n_values}, {"samples", c.ladder.samples}};
  OJson b = OJson::object();
  if (c.boundary.expect_lower) b["expect_lower"] = *c.boundary.expect_lower;
  if (c.boundary.expect_upper) b["expect_upper"] = *c.boundary.expect_upper;
  j["boundary"] = b;
  j["verify"] = {{"criteria", c.verify.criteria},
                 {"sample_scale", c.verify.sample_scale},
                 {"determinism_workers", c.verify.determinism_workers}};
  return j;
}

ModelConfig build_model(const ExperimentConfig& c) {
  const ScenarioConfig& s = c.scenario;
  ModelConfig m;
  if (s.name == "custom") {
    m.potential = PotentialSpec::from_expression(s.potential, s.singular_at_origin);
    m.density = DensitySpec::constant(1.0);
    m.mass = s.mass;
    m.energy = s.energy;
    m.dim = s.dim;
    m.name = "custom";
    try {
      m.domain = domain_from_potential(m.potential, s.energy, s.mass,
                                       {s.search_lower, s.search_upper}, s.seed_radius);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("scenario: ") + e.what());
    }
  } else {
    m = make_scenario(s.name, {s.params.begin(), s.params.end()}, s.dim);
  }
  if (s.density) {
    const DensityConfig& d = *s.density;
    if (d.kind == "constant") {
      m.density = DensitySpec::constant(d.g0);
    } else if (d.kind == "linear") {
      m.density = DensitySpec::linear(d.g0, d.beta);
    } else {
      m.density = DensitySpec::from_expression(d.expression);
    }
  }
  m.numerics = c.numerics;
  m.radial = c.radial;
  m.covariance = c.covariance;
  m.n = c.n;
  const ValidationReport report = validate_assumptions(m);
  if (!report.all_passed()) {
    throw ConfigError("assumption validation failed:\n" + report.summary());
  }
  return m;
}

namespace {

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

class Output {
 public:
  explicit Output(const std::filesystem::path& dir) : dir_(dir) {
    std::filesystem::create_directories(dir_);
  }
  std::ofstream open(const std::string& name) const {
    std::ofstream out(dir_ / name);
    if (!out) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
    out << std::setprecision(17);
    return out;
  }
  void json(const std::string& name, const OJson& j) const { open(name) << j.dump(2) << "\n"; }

 private:
  std::filesystem::path dir_;
};

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

void check_launch(const ExperimentConfig& c, const ModelConfig& m, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != m.dim) throw ConfigError("x0: length must equal scenario.dim");
  if (!m.domain.contains_open(norm(x))) throw ConfigError("x0: |x0| must lie inside the domain");
  if (c.band && (c.band->first < m.domain.lower || c.band->second > m.domain.upper)) {
    throw ConfigError("band: must lie inside the domain");
  }
}

OJson run_chain_experiment(const ExperimentConfig& c, const ModelConfig& model, const Output& out,
                           std::vector<Assertion>& asserts) {
  const auto x0 = c.launch_point();
  check_launch(c, model, x0);
  const ModelConfig cfg = with_scaling(model, c.n);
  ChainOptions co;
  co.step_budget = c.chain.steps;
  co.band = c.band;
  const RngStream root(c.seed, 0);
  const auto runs = parallel_map(c.chain.replicas, c.workers, [&](std::size_t i) {
    ChainOptions o = co;
    o.keep_records = i == 0;
    return run_chain(x0, cfg, o, root.substream(i));
  });
  {
    auto f = out.open("chain.jsonl");
    write_chain_jsonl(runs.front(), f);
  }
  auto rep = out.open("replicas.csv");
  rep << "replica,flights,stop_reason,tau,iota,t_scaled,t_raw,r\n";
  ConservationStats cons;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    cons.merge(r.conservation);
    if (r.stop_reason == StopReason::SlowRegion || r.stop_reason == StopReason::NumericFailure) {
      ++failures;
    }
    rep << i << "," << r.flights << "," << to_string(r.stop_reason) << ","
        << (r.tau ? std::to_string(*r.tau) : "") << ",";
    if (r.iota) rep << *r.iota;
    rep << "," << r.last.t_scaled << "," << r.last.t_raw << "," << norm(r.last.x) << "\n";
  }
  // Scaled time is n^{-3/4} times the summed free times.
  double worst = 0.0, sum = 0.0;
  const double scale = std::pow(c.n, -0.75);
  for (const auto& rec : runs.front().records) {
    worst = std::max(worst, std::abs(rec.t_scaled - scale * sum) / std::max(1.0, rec.t_scaled));
    sum += rec.N;
  }
  asserts.push_back({"time_telescoping", worst <= 1e-12, "max relative gap " + num(worst)});
  asserts.push_back({"conservation", cons.violations == 0,
                     std::to_string(cons.violations) + " of " + std::to_string(cons.flights) +
                         " flights over tolerance"});
  asserts.push_back({"no_numeric_failures", failures == 0,
                     std::to_string(failures) + " replicas ended by a numeric failure"});
  OJson res;
  res["replicas"] = runs.size();
  res["flights"] = cons.flights;
  res["max_energy_drift"] = cons.max_energy_drift;
  res["max_angular_momentum_drift"] = cons.max_L_drift;
  const auto& first = runs.front();
  res["replica0_stop_reason"] = to_string(first.stop_reason);
  res["replica0_final_t_scaled"] = first.last.t_scaled;
  res["replica0_final_x"] = first.last.x;
  return res;
}

OJson run_trajectory_experiment(const ExperimentConfig& c, const ModelConfig& model,
                                const Output& out, std::vector<Assertion>& asserts) {
  const auto x0 = c.launch_point();
  check_launch(c, model, x0);
  const ModelConfig cfg = with_scaling(model, c.n);
  ChainOptions co;
  co.step_budget = c.chain.steps;
  co.band = c.band;
  const ChainRun run = run_chain(x0, cfg, co, RngStream(c.seed, 0));
  {
    auto f = out.open("chain.jsonl");
    write_chain_jsonl(run, f);
  }
  TrajectoryReconstructor rec(run, cfg);
  const double horizon = rec.horizon();
  const double scale = std::pow(c.n, -0.75);
  auto f = out.open("trajectory.csv");
  f << "t_raw,t_scaled";
  for (int i = 0; i < cfg.dim; ++i) f << ",x" << i + 1;
  f << ",r,energy,angular_momentum\n";
  double worst_energy = 0.0;
  const std::size_t points = c.trajectory.points;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = horizon * static_cast<double>(i) / static_cast<double>(points - 1);
    const PhaseState s = rec.state_at(t);
    worst_energy = std::max(worst_energy, std::abs(s.energy - cfg.energy) / std::abs(cfg.energy));
    f << t << "," << scale * t;
    for (double v : s.x) f << "," << v;
    f << "," << s.r << "," << s.energy << "," << s.L << "\n";
  }
  bool exact = true;
  for (const auto& r : run.records) exact = exact && rec.position_at(r.t_raw) == r.x;
  asserts.push_back({"records_reproduced", exact,
                     "reconstruction passes through every reflection point"});
  // Interpolated states carry the dense-output error on top of the step error.
  const double energy_tol = 100.0 * cfg.numerics.invariant_tol;
  asserts.push_back({"energy_along_trajectory", worst_energy <= energy_tol,
                     "max relative energy error " + num(worst_energy)});
  OJson res;
  res["reflections"] = run.records.size() - 1;
  res["horizon_raw"] = horizon;
  res["horizon_scaled"] = scale * horizon;
  res["points"] = points;
  res["max_energy_error"] = worst_energy;
  return res;
}

OJson run_diffusion_experiment(const ExperimentConfig& c, const ModelConfig& model,
                               const Output& out, std::vector<Assertion>& asserts) {
  const auto& d = c.diffusion;
  const auto x0 = c.launch_point();
  check_launch(c, model, x0);
  if (!std::isfinite(d.horizon) && !c.band) {
    throw ConfigError("diffusion.horizon: an infinite horizon needs a band");
  }
  DiffusionOptions opt;
  opt.dt = d.dt;
  opt.horizon = d.horizon;
  opt.band = c.band;
  opt.snapshot_time = d.snapshot_time;
  const RngStream root(c.seed, 0);
  const auto paths = parallel_map(d.paths, c.workers, [&](std::size_t i) {
    DiffusionOptions o = opt;
    o.record_path = i < d.record_paths;
    RngStream s = root.substream(i);
    if (d.process == "Gr") return simulate_Gr(norm(x0), model, o, s);
    if (d.process == "natural") return simulate_natural(x0, model, o, s);
    return simulate_G(x0, model, o, s);
  });
  auto radius = [&](const std::vector<double>& x) { return d.process == "Gr" ? x[0] : norm(x); };
  auto ex = out.open("exits.csv");
  ex << "path,exited,exit_time,exit_side,final_time,final_r,final_A";
  if (d.snapshot_time) ex << ",snapshot_r,snapshot_A";
  ex << "\n";
  std::size_t exited = 0, upper = 0;
  double sum_t = 0.0, sum_t2 = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& p = paths[i];
    ex << i << "," << (p.exited ? 1 : 0) << ",";
    if (p.exit_time) ex << *p.exit_time;
    ex << "," << p.exit_side << "," << p.final_time << "," << radius(p.final_state) << ","
       << p.final_A;
    if (d.snapshot_time) ex << "," << radius(*p.snapshot) << "," << p.snapshot_A;
    ex << "\n";
    if (p.exited) {
      ++exited;
      upper += p.exit_side > 0 ? 1 : 0;
      sum_t += *p.exit_time;
      sum_t2 += *p.exit_time * *p.exit_time;
    }
  }
  if (d.record_paths > 0) {
    auto pf = out.open("paths.csv");
    pf << "path,t";
    if (d.process == "Gr") {
      pf << ",r";
    } else {
      for (int i = 0; i < model.dim; ++i) pf << ",x" << i + 1;
    }
    pf << ",A\n";
    for (std::size_t i = 0; i < std::min(d.record_paths, paths.size()); ++i) {
      const auto& p = paths[i];
      for (std::size_t k = 0; k < p.t.size(); ++k) {
        pf << i << "," << p.t[k];
        for (double v : p.states[k]) pf << "," << v;
        pf << "," << p.A[k] << "\n";
      }
    }
  }
  bool increasing = true;
  for (const auto& p : paths) {
    for (std::size_t k = 1; k < p.A.size(); ++k) increasing = increasing && p.A[k] > p.A[k - 1];
  }
  asserts.push_back({"clock_increasing", increasing, "A strictly increasing on recorded paths"});

  OJson res;
  res["process"] = d.process;
  res["paths"] = paths.size();
  res["exited"] = exited;
  if (exited > 0) {
    const double m = sum_t / static_cast<double>(exited);
    const double var = exited > 1 ? (sum_t2 - exited * m * m) / (exited - 1.0) : 0.0;
    res["mean_exit_time"] = m;
    res["mean_exit_time_se"] = std::sqrt(std::max(var, 0.0) / static_cast<double>(exited));
    res["upper_exit_fraction"] = static_cast<double>(upper) / static_cast<double>(exited);
  }
  const bool scale_applies = d.process == "Gr" || model.radial == RadialConvention::Ito;
  if (c.band && exited == paths.size() && scale_applies) {
    const double p = hitting_probability(model, norm(x0), c.band->first, c.band->second);
    const double freq = static_cast<double>(upper) / static_cast<double>(paths.size());
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(paths.size()));
    const double z = se > 0.0 ? (freq - p) / se : 0.0;
    res["scale_hitting_probability"] = p;
    asserts.push_back({"hitting_probability", std::abs(z) <= 3.0,
                       "upper exit frequency " + num(freq) + " vs " + num(p) + " (z=" + num(z) +
                           ")"});
  }
  return res;
}

OJson run_ladder_experiment(const ExperimentConfig& c, const ModelConfig& model,
                            const Output& out, std::vector<Assertion>& asserts) {
  const auto x0 = c.launch_point();
  check_launch(c, model, x0);
  const LadderResult lad = convergence_ladder(x0, model, c.ladder.n_values, c.ladder.samples,
                                              RngStream(c.seed, 0), c.workers);
  {
    auto f = out.open("ladder.csv");
    write_ladder_csv(lad, f);
  }
  const LadderRow& first = lad.rows.front();
  const LadderRow& last = lad.rows.back();
  const std::size_t k = last.theory.drift.size();
  const int d = last.theory.dim;
  bool within = true, not_worse = true, cov_ok = true;
  for (std::size_t i = 0; i < k; ++i) {
    const double e_last = std::abs(last.moments.drift[i] - last.theory.drift[i]);
    const double e_first = std::abs(first.moments.drift[i] - first.theory.drift[i]);
    within = within && e_last <= 3.0 * last.moments.drift_se[i];
    not_worse = not_worse &&
                e_last <= e_first + 2.0 * std::hypot(last.moments.drift_se[i],
                                                     first.moments.drift_se[i]);
  }
  for (int i = 0; i <= d; ++i) {
    for (int j = 0; j <= d; ++j) {
      if (i == d && j == d) continue;
      const double e = std::abs(last.moments.cov_at(i, j) - last.theory.cov_at(i, j));
      cov_ok = cov_ok && e <= 3.0 * last.moments.cov_se_at(i, j);
    }
  }
  ConservationStats cons;
  std::size_t failures = 0;
  OJson rows = OJson::array();
  for (const auto& row : lad.rows) {
    cons.merge(row.moments.conservation);
    failures += row.moments.failures;
    OJson r;
    r["n"] = row.n;
    r["samples"] = row.moments.count;
    r["failures"] = row.moments.failures;
    r["drift_discrepancy"] = row.drift_discrepancy;
    r["drift_discrepancy_se"] = row.drift_discrepancy_se;
    r["covariance_discrepancy"] = row.cov_discrepancy;
    r["covariance_discrepancy_se"] = row.cov_discrepancy_se;
    r["ks_distance"] = row.ks_distance;
    rows.push_back(r);
  }
  asserts.push_back({"final_drift_within_3se", within, "every drift component at the last n"});
  asserts.push_back({"drift_not_worse_than_first", not_worse,
                     "final error <= first error + 2 pooled SE per component"});
  asserts.push_back({"final_covariance_within_3se", cov_ok,
                     "spatial and mixed covariance components at the last n"});
  asserts.push_back({"conservation", cons.violations == 0,
                     std::to_string(cons.violations) + " flights over tolerance"});
  asserts.push_back({"no_failures", failures == 0, std::to_string(failures) + " failed flights"});
  OJson res;
  res["rows"] = rows;
  return res;
}

OJson run_boundary_experiment(const ExperimentConfig& c, const ModelConfig& model,
                              const Output& out, std::vector<Assertion>& asserts) {
  const BoundaryReport rep = classify_boundaries(model);
  const OJson j = to_json(rep);
  out.json("boundary.json", j);
  for (const auto& e : rep.endpoints) {
    asserts.push_back({e.endpoint + "_conclusive", e.classification != Accessibility::Inconclusive,
                       e.endpoint + " endpoint " + to_string(e.classification) + " (" +
                           e.reason + ")"});
  }
  auto expect = [&](const std::optional<std::string>& want, const BoundaryEntry& e) {
    if (!want) return;
    asserts.push_back({e.endpoint + "_expected", to_string(e.classification) == *want,
                       "expected " + *want + ", got " + to_string(e.classification)});
  };
  expect(c.boundary.expect_lower, rep.endpoints[0]);
  expect(c.boundary.expect_upper, rep.endpoints[1]);
  return j;
}

OJson run_verify_experiment(const ExperimentConfig& c, const Output& out, std::ostream& log,
                            std::vector<Assertion>& asserts) {
  AcceptanceOptions opt;
  opt.seed = c.seed;
  opt.workers = c.workers;
  opt.criteria = c.verify.criteria;
  opt.sample_scale = c.verify.sample_scale;
  opt.determinism_workers = c.verify.determinism_workers;
  const AcceptanceReport rep = run_acceptance(opt, [&](const CriterionResult& r) {
    log << format_result(r) << std::endl;
  });
  out.json("acceptance.json", rep.summary());
  out.json("timing.json", rep.timing());
  for (const auto& r : rep.results) {
    asserts.push_back({"criterion_" + std::to_string(r.id), r.passed, r.name + ": " + r.detail});
  }
  OJson res;
  res["criteria_run"] = rep.results.size();
  res["all_passed"] = rep.all_passed();
  return res;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& c, std::ostream& log) {
  const Output out(c.output);
  out.json("resolved_config.json", resolved_json(c));
  const ModelConfig model = build_model(c);
  std::vector<Assertion> asserts;
  OJson results;
  switch (c.kind) {
    case ExperimentKind::SimulateChain:
      results = run_chain_experiment(c, model, out, asserts);
      break;
    case ExperimentKind::SimulateTrajectory:
      results = run_trajectory_experiment(c, model, out, asserts);
      break;
    case ExperimentKind::SimulateDiffusion:
      results = run_diffusion_experiment(c, model, out, asserts);
      break;
    case ExperimentKind::Ladder:
      results = run_ladder_experiment(c, model, out, asserts);
      break;
    case ExperimentKind::ClassifyBoundary:
      results = run_boundary_experiment(c, model, out, asserts);
      break;
    case ExperimentKind::Verify:
      results = run_verify_experiment(c, out, log, asserts);
      break;
  }
  ExperimentOutcome outcome;
  bool all = true;
  OJson list = OJson::array();
  for (const auto& a : asserts) {
    all = all && a.passed;
    list.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  }
  outcome.summary["experiment"] = to_string(c.kind);
  outcome.summary["seed"] = c.seed;
  outcome.summary["scenario"] = model.name;
  outcome.summary["all_passed"] = all;
  outcome.summary["assertions"] = list;
  outcome.summary["results"] = results;
  out.json("summary.json", outcome.summary);
  outcome.exit_code = all ? kExitOk : kExitAssertion;
  if (c.kind != ExperimentKind::Verify) {
    for (const auto& a : asserts) {
      log << (a.passed ? "[PASS] " : "[FAIL] ") << a.name << ": " << a.detail << "\n";
    }
  }
  return outcome;
}

int run_command(const CommandLine& cmd, std::ostream& log, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = parse_config(cmd.config_path, cmd.kind);
    if (cmd.output) config.output = *cmd.output;
    if (cmd.workers) {
      if (*cmd.workers < 1) throw ConfigError("--workers must be at least 1");
      config.workers = *cmd.workers;
    }
    if (cmd.seed_override) config.seed = *cmd.seed_override;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const ExperimentOutcome outcome = run_experiment(config, log);
    log << "summary written to " << (std::filesystem::path(config.output) / "summary.json").string()
        << "\n";
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace rflight
