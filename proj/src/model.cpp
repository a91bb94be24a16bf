#include "rflight/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rflight/errors.hpp"
#include "rflight/expression.hpp"
#include "rflight/roots.hpp"

namespace rflight {

PotentialSpec PotentialSpec::constant_force(double c) {
  PotentialSpec p;
  p.kind = PotentialKind::ConstantForce;
  p.params = {c};
  p.value = [c](double r) { return c * r; };
  p.derivative = [c](double) { return c; };
  return p;
}

PotentialSpec PotentialSpec::newtonian(double k) {
  PotentialSpec p;
  p.kind = PotentialKind::Newtonian;
  p.params = {k};
  p.value = [k](double r) { return -k / r; };
  p.derivative = [k](double r) { return k / (r * r); };
  p.singular_at_origin = true;
  return p;
}

PotentialSpec PotentialSpec::free() {
  PotentialSpec p;
  p.kind = PotentialKind::Free;
  p.value = [](double) { return 0.0; };
  p.derivative = [](double) { return 0.0; };
  return p;
}

PotentialSpec PotentialSpec::harmonic(double a) {
  PotentialSpec p;
  p.kind = PotentialKind::Harmonic;
  p.params = {a};
  p.value = [a](double r) { return a * r * r; };
  p.derivative = [a](double r) { return 2.0 * a * r; };
  return p;
}

PotentialSpec PotentialSpec::from_expression(const std::string& text, bool singular) {
  const Expression e = Expression::parse(text);
  PotentialSpec p;
  p.kind = PotentialKind::Expression;
  p.expression = text;
  p.value = [e](double r) { return e.value(r); };
  p.derivative = [e](double r) { return e.derivative(r); };
  p.singular_at_origin = singular;
  return p;
}

PotentialSpec PotentialSpec::callable(std::function<double(double)> u,
                                      std::function<double(double)> du, bool singular) {
  PotentialSpec p;
  p.kind = PotentialKind::Callable;
  p.value = std::move(u);
  p.derivative = std::move(du);
  p.singular_at_origin = singular;
  return p;
}

DensitySpec DensitySpec::constant(double g0) {
  DensitySpec d;
  d.description = "constant";
  d.params = {g0};
  d.value = [g0](double) { return g0; };
  d.derivative = [](double) { return 0.0; };
  return d;
}

DensitySpec DensitySpec::linear(double g0, double beta) {
  DensitySpec d;
  d.description = "linear";
  d.params = {g0, beta};
  d.value = [g0, beta](double r) { return g0 * (1.0 + beta * r); };
  d.derivative = [g0, beta](double) { return g0 * beta; };
  return d;
}

DensitySpec DensitySpec::from_expression(const std::string& text) {
  const Expression e = Expression::parse(text);
  DensitySpec d;
  d.description = text;
  d.value = [e](double r) { return e.value(r); };
  d.derivative = [e](double r) { return e.derivative(r); };
  return d;
}

DensitySpec DensitySpec::callable(std::function<double(double)> g,
                                  std::function<double(double)> dg) {
  DensitySpec d;
  d.description = "callable";
  d.value = std::move(g);
  d.derivative = std::move(dg);
  return d;
}

std::string to_string(EndpointKind kind) {
  switch (kind) {
    case EndpointKind::Origin:
      return "origin";
    case EndpointKind::Wall:
      return "wall";
    case EndpointKind::Infinity:
      return "infinity";
    case EndpointKind::Truncated:
      return "truncated";
  }
  return "?";
}

std::string to_string(RadialConvention c) {
  return c == RadialConvention::Ito ? "ito" : "as_printed";
}

std::string to_string(CovarianceConvention c) {
  return c == CovarianceConvention::TwoOverD ? "two_over_d" : "d_minus_one_over_d";
}

double ModelConfig::length_scale() const {
  if (std::isfinite(domain.upper)) return domain.upper;
  return 1.0;
}

double ModelConfig::covariance_constant() const {
  const double d = dim;
  return covariance == CovarianceConvention::TwoOverD ? 2.0 / d : (d - 1.0) / d;
}

ModelConfig with_scaling(ModelConfig config, double n) {
  config.n = n;
  return config;
}

double speed(const ModelConfig& config, double r) {
  if (!config.domain.contains_closed(r)) {
    throw DomainError("speed: r=" + std::to_string(r) + " outside the domain");
  }
  double k = config.kinetic(r);
  if (!std::isfinite(k)) throw DomainError("speed: potential not finite at r=" + std::to_string(r));
  if (k < 0.0) {
    // Allow root-finding residue at a wall.
    if (k >= -1e-12 * std::max(1.0, std::abs(config.energy))) {
      k = 0.0;
    } else {
      throw DomainError("speed: E - U(r) < 0 at r=" + std::to_string(r));
    }
  }
  return std::sqrt(2.0 * k / config.mass);
}

double scaled_speed(const ModelConfig& config, double r) {
  return std::pow(config.n, -0.25) * speed(config, r);
}

double scaled_hazard(const ModelConfig& config, double r) {
  return std::sqrt(config.n) * config.g(r) * scaled_speed(config, r);
}

Domain domain_from_potential(const PotentialSpec& potential, double energy, double mass,
                             SearchInterval search, double seed) {
  if (!(mass > 0.0)) throw DomainError("domain_from_potential: mass must be positive");
  if (!(seed > search.lower && seed < search.upper)) {
    throw DomainError("domain_from_potential: seed outside the search interval");
  }
  auto f = [&](double r) { return energy - potential.value(r); };
  auto df = [&](double r) { return -potential.derivative(r); };
  auto positive = [&](double r) {
    const double v = f(r);
    return v > 0.0 || (std::isinf(v) && v > 0.0);
  };
  if (!positive(seed)) {
    throw DomainError("domain_from_potential: E <= U at the seed point");
  }
  Domain d;

  // Upward scan.
  std::optional<std::pair<double, double>> upper_bracket;
  if (std::isfinite(search.upper)) {
    constexpr int K = 4000;
    double prev = seed;
    for (int k = 1; k <= K; ++k) {
      const double r = seed + (search.upper - seed) * k / K;
      if (!positive(r)) {
        upper_bracket = {prev, r};
        break;
      }
      prev = r;
    }
  } else {
    const double base = std::max(seed, 1e-3);
    double prev = seed;
    for (int k = 1;; ++k) {
      const double r = seed + base * (std::exp2(k / 16.0) - 1.0);
      if (r > 1e12) break;
      if (!positive(r)) {
        upper_bracket = {prev, r};
        break;
      }
      prev = r;
    }
  }
  if (upper_bracket) {
    const auto [a, b] = *upper_bracket;
    d.upper = f(b) == 0.0 ? b : find_root_bracketed(f, a, b, 1e-12, df).root;
    d.upper_kind = EndpointKind::Wall;
  } else {
    d.upper = search.upper;
    d.upper_kind = std::isfinite(search.upper) ? EndpointKind::Truncated : EndpointKind::Infinity;
  }

  // Downward scan.
  std::optional<std::pair<double, double>> lower_bracket;
  {
    constexpr int K = 4000;
    double prev = seed;
    for (int k = 1; k <= K; ++k) {
      const double r = seed - (seed - search.lower) * k / K;
      if (!positive(r)) {
        lower_bracket = {r, prev};
        break;
      }
      prev = r;
    }
  }
  if (lower_bracket) {
    const auto [a, b] = *lower_bracket;
    d.lower = f(a) == 0.0 ? a : find_root_bracketed(f, a, b, 1e-12, df).root;
    d.lower_kind = EndpointKind::Wall;
  } else {
    d.lower = search.lower;
    d.lower_kind = search.lower == 0.0 ? EndpointKind::Origin : EndpointKind::Truncated;
  }
  return d;
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << c.name << ": " << (c.passed ? "pass" : "FAIL");
    if (c.witness) os << " (witness r=" << *c.witness << ")";
    if (!c.detail.empty()) os << " " << c.detail;
    os << "\n";
  }
  return os.str();
}

namespace {

std::vector<double> validation_grid(const ModelConfig& config) {
  const Domain& dom = config.domain;
  const Numerics& num = config.numerics;
  const std::size_t n = std::max<std::size_t>(num.validation_grid, 10);
  double lo = dom.lower;
  if (config.potential.singular_at_origin && dom.lower == 0.0) {
    lo = num.singular_eps * std::min(dom.upper, num.r_max);
  }
  std::vector<double> grid(n);
  if (std::isfinite(dom.upper)) {
    for (std::size_t i = 0; i < n; ++i) grid[i] = lo + (dom.upper - lo) * (i + 0.5) / n;
  } else {
    const double a = std::max(lo, 1e-6 * num.r_max);
    const double la = std::log(a), lb = std::log(num.r_max);
    for (std::size_t i = 0; i < n; ++i) grid[i] = std::exp(la + (lb - la) * (i + 0.5) / n);
  }
  return grid;
}

bool derivative_consistent(const std::function<double(double)>& f,
                           const std::function<double(double)>& df, double r) {
  const double h = 1e-4 * std::max(r, 1e-3);
  const double fd = (f(r + h) - f(r - h)) / (2.0 * h);
  const double d = df(r);
  if (!std::isfinite(fd) || !std::isfinite(d)) return false;
  return std::abs(fd - d) <= 1e-6 * (std::abs(d) + 1e-6);
}

}  // namespace

ValidationReport validate_assumptions(const ModelConfig& config) {
  ValidationReport report;
  const Domain& dom = config.domain;

  AssumptionCheck basic;
  basic.name = "config";
  if (!(config.mass > 0.0)) {
    basic.passed = false;
    basic.detail = "mass must be positive";
  } else if (config.dim < 2) {
    basic.passed = false;
    basic.detail = "dimension must be at least 2";
  } else if (!(config.n > 0.0)) {
    basic.passed = false;
    basic.detail = "scaling n must be positive";
  } else if (!(dom.lower >= 0.0 && dom.lower < dom.upper)) {
    basic.passed = false;
    basic.detail = "domain needs 0 <= h- < h+";
  }
  report.checks.push_back(basic);
  if (!basic.passed) return report;

  const std::vector<double> grid = validation_grid(config);

  AssumptionCheck a1;
  a1.name = "A1";
  for (double r : grid) {
    const double k = config.kinetic(r);
    if (!(k > 0.0) || !std::isfinite(k)) continue;
    const double lhs = std::sqrt(config.n) * config.g(r) * scaled_speed(config, r);
    const double rhs = std::pow(config.n, 0.25) * config.g(r) * speed(config, r);
    if (std::abs(lhs - rhs) > 1e-12 * std::abs(rhs)) {
      a1.passed = false;
      a1.witness = r;
      a1.detail = "g_n v_n != n^{1/4} g v";
      break;
    }
  }
  report.checks.push_back(a1);

  AssumptionCheck a2;
  a2.name = "A2";
  for (double r : grid) {
    const double k = config.kinetic(r);
    if (!(k > 0.0) || std::isnan(k)) {
      a2.passed = false;
      a2.witness = r;
      a2.detail = "E - U(r) = " + std::to_string(k);
      break;
    }
  }
  report.checks.push_back(a2);

  AssumptionCheck a3;
  a3.name = "A3";
  const double wall_tol = 1e-9 * std::max(1.0, std::abs(config.energy));
  auto check_wall = [&](double h, bool upper) {
    const double k = config.kinetic(h);
    if (!(std::abs(k) <= wall_tol)) {
      a3.passed = false;
      a3.witness = h;
      a3.detail = "wall endpoint with E - U(h) = " + std::to_string(k);
      return;
    }
    const double du = config.dU(h);
    // Force -U' must point back into D.
    if (upper ? !(du > 0.0) : !(du < 0.0)) {
      a3.passed = false;
      a3.witness = h;
      a3.detail = "force does not point inward at the wall";
    }
  };
  if (dom.upper_kind == EndpointKind::Wall) check_wall(dom.upper, true);
  if (dom.lower_kind == EndpointKind::Wall && a3.passed) check_wall(dom.lower, false);
  if (a3.passed && dom.lower == 0.0) {
    const double k0 = config.kinetic(0.0);
    if (config.potential.singular_at_origin) {
      if (!(k0 > 0.0) && !std::isnan(k0)) {
        a3.passed = false;
        a3.witness = 0.0;
        a3.detail = "singular potential must tend to -infinity at the origin";
      }
    } else if (!(k0 > 0.0) || !std::isfinite(k0)) {
      a3.passed = false;
      a3.witness = 0.0;
      a3.detail = "E - U(0) must be positive";
    }
  }
  if (a3.passed && dom.upper_kind == EndpointKind::Infinity) {
    double inf_k = kInfinity;
    double arg = 0.0;
    for (double r : grid) {
      const double k = config.kinetic(r);
      if (k < inf_k) {
        inf_k = k;
        arg = r;
      }
    }
    const double far = config.kinetic(config.numerics.r_max);
    if (!(inf_k > 0.0) || !(far > 0.0)) {
      a3.passed = false;
      a3.witness = arg;
      a3.detail = "inf of E - U towards infinity is not positive";
    } else {
      a3.detail = "inf E - U on grid = " + std::to_string(inf_k);
    }
  }
  report.checks.push_back(a3);

  AssumptionCheck a4;
  a4.name = "A4";
  const std::size_t stride = std::max<std::size_t>(grid.size() / 100, 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid[i];
    if (!std::isfinite(config.U(r)) || !std::isfinite(config.dU(r))) {
      a4.passed = false;
      a4.witness = r;
      a4.detail = "U or U' not finite";
      break;
    }
    if (i % stride == 0 && !derivative_consistent(config.potential.value,
                                                  config.potential.derivative, r)) {
      a4.passed = false;
      a4.witness = r;
      a4.detail = "U' disagrees with a central difference of U";
      break;
    }
  }
  report.checks.push_back(a4);

  AssumptionCheck a5;
  a5.name = "A5";
  std::vector<double> g_points = grid;
  if (std::isfinite(dom.lower)) g_points.insert(g_points.begin(), dom.lower);
  if (std::isfinite(dom.upper)) g_points.push_back(dom.upper);
  double inf_g = kInfinity;
  for (std::size_t i = 0; i < g_points.size(); ++i) {
    const double r = g_points[i];
    const double g = config.g(r);
    if (!(g > 0.0) || !std::isfinite(g)) {
      a5.passed = false;
      a5.witness = r;
      a5.detail = "g(r) = " + std::to_string(g);
      break;
    }
    inf_g = std::min(inf_g, g);
    if (i % stride == 0 && !derivative_consistent(config.density.value,
                                                  config.density.derivative, r)) {
      a5.passed = false;
      a5.witness = r;
      a5.detail = "g' disagrees with a central difference of g";
      break;
    }
  }
  if (a5.passed) a5.detail = "inf g = " + std::to_string(inf_g);
  report.checks.push_back(a5);
  return report;
}

}  // namespace rflight
