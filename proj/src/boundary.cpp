#include "rflight/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "rflight/diffusion.hpp"
#include "rflight/errors.hpp"
#include "rflight/quadrature.hpp"
#include "rflight/stats.hpp"

namespace rflight {

double default_reference_point(const ModelConfig& config) {
  const Domain& D = config.domain;
  if (std::isfinite(D.upper)) return 0.5 * (D.lower + D.upper);
  return D.lower + 1.0;
}

ScaleSpeed::ScaleSpeed(const ModelConfig& config)
    : ScaleSpeed(config, default_reference_point(config), default_reference_point(config)) {}

ScaleSpeed::ScaleSpeed(const ModelConfig& config, double a, double c)
    : config_(config), a_(a), c_(c) {
  if (!config_.domain.contains_open(a) || !config_.domain.contains_open(c)) {
    throw DomainError("ScaleSpeed: reference points must lie in the open domain");
  }
  const double d = config_.dim;
  const double cs = config_.covariance_constant();
  kappa_ = config_.radial == RadialConvention::Ito ? d - 1.0 : 1.0;
  p_ = (d - 1.0) / (d * cs);
  q_ = 2.0 / (d * cs);
  log_norm_ = 0.0;
  log_norm_ = -std::log(scale_density(a));
}

double ScaleSpeed::scale_density(double y) const {
  const double k = config_.kinetic(y);
  const double g = config_.g(y);
  if (!(y > 0.0) || !(k > 0.0) || !(g > 0.0)) {
    throw DomainError("scale_density: y outside the open domain");
  }
  return std::exp(log_norm_ + q_ * std::log(g) - kappa_ * std::log(y) - p_ * std::log(k));
}

double ScaleSpeed::sigma_r2(double x) const {
  const double g = config_.g(x);
  return config_.covariance_constant() / (g * g);
}

double ScaleSpeed::speed_density(double x) const {
  if (!config_.domain.contains_open(x)) {
    throw DomainError("speed_density: x must lie in the open domain");
  }
  return 2.0 / (sigma_r2(x) * scale_density(x));
}

double ScaleSpeed::radial_drift(double x) const {
  return DiffusionCoefficients(config_).radial_process_drift(x);
}

double ScaleSpeed::B(double y) const {
  if (y == a_) return 0.0;
  const auto f = [this](double x) { return 2.0 * radial_drift(x) / sigma_r2(x); };
  const double lo = std::min(a_, y), hi = std::max(a_, y);
  const double v = integrate_adaptive(f, lo, hi, 1e-13).value;
  return y > a_ ? v : -v;
}

double ScaleSpeed::scale(double x) const {
  if (!config_.domain.contains_open(x)) {
    throw DomainError("scale: x must lie in the open domain");
  }
  if (x == c_) return 0.0;
  const auto f = [this](double y) { return scale_density(y); };
  const double lo = std::min(c_, x), hi = std::max(c_, x);
  const double v = integrate_adaptive(f, lo, hi, 1e-12).value;
  return x > c_ ? v : -v;
}

namespace {

constexpr int kMaxPieces = 40;
constexpr int kRatioWindow = 10;
constexpr double kGrowthCap = 1e12;

// Local coordinate u in (0, delta] measuring the distance to an endpoint.
struct EndpointMesh {
  double endpoint = 0.0;
  bool upper = false;
  bool infinite = false;
  double delta = 0.0;
  int pieces = kMaxPieces;

  double y(double u) const {
    if (infinite) return 1.0 / u;
    return upper ? endpoint - u : endpoint + u;
  }
  double jacobian(double u) const { return infinite ? 1.0 / (u * u) : 1.0; }
  // Piece j (1-based) spans [delta 2^-j, delta 2^-(j-1)].
  double lo(int j) const { return std::ldexp(delta, -j); }
  double hi(int j) const { return std::ldexp(delta, -(j - 1)); }
};

EndpointMesh make_mesh(const ScaleSpeed& ss, bool upper) {
  const Domain& D = ss.config().domain;
  EndpointMesh m;
  m.upper = upper;
  m.endpoint = upper ? D.upper : D.lower;
  m.infinite = upper && !std::isfinite(D.upper);
  const double c = ss.c();
  if (m.infinite) {
    m.delta = 1.0 / c;
  } else {
    m.delta = upper ? m.endpoint - c : c - m.endpoint;
  }
  const EndpointKind kind = upper ? D.upper_kind : D.lower_kind;
  if (kind == EndpointKind::Wall || kind == EndpointKind::Truncated) {
    // Walls are located to ~1e-12 and E - U cancels near them; keep the
    // mesh well above that resolution.
    const double floor = 1e-8 * std::max(1.0, std::abs(m.endpoint));
    m.pieces = std::clamp(static_cast<int>(std::floor(std::log2(m.delta / floor))), 12,
                          kMaxPieces);
  }
  return m;
}

double piece_integral(const std::function<double(double)>& h, double a, double b) {
  const double guess = std::abs(h(0.5 * (a + b))) * (b - a);
  const double tol = std::max(1e-10 * guess, 1e-300);
  return integrate_adaptive(h, a, b, tol).value;
}

MeshTest cauchy_test(std::vector<double> pieces) {
  MeshTest t;
  t.pieces = std::move(pieces);
  for (double p : t.pieces) t.partial_sum += p;
  std::vector<double> ratios;
  const int n = static_cast<int>(t.pieces.size());
  for (int j = std::max(1, n - kRatioWindow); j < n; ++j) {
    const double prev = t.pieces[j - 1];
    ratios.push_back(prev > 0.0 ? t.pieces[j] / prev : kInfinity);
  }
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    const std::size_t m = ratios.size();
    t.median_ratio = m % 2 ? ratios[m / 2] : 0.5 * (ratios[m / 2 - 1] + ratios[m / 2]);
  }
  if (!std::isfinite(t.partial_sum) || t.partial_sum > kGrowthCap || t.median_ratio >= 0.97) {
    t.verdict = Verdict::Divergent;
  } else if (t.median_ratio <= 0.9) {
    t.verdict = Verdict::Convergent;
  } else {
    t.verdict = Verdict::Inconclusive;
  }
  return t;
}

// Remaining mass beyond the last piece under the observed geometric decay.
double geometric_tail(const MeshTest& t) {
  if (t.pieces.empty() || t.median_ratio >= 1.0) return 0.0;
  return t.pieces.back() * t.median_ratio / (1.0 - t.median_ratio);
}

MeshTest scale_mesh_test(const ScaleSpeed& ss, const EndpointMesh& mesh) {
  const auto h = [&](double u) { return ss.scale_density(mesh.y(u)) * mesh.jacobian(u); };
  std::vector<double> pieces;
  for (int j = 1; j <= mesh.pieces; ++j) {
    pieces.push_back(piece_integral(h, mesh.lo(j), mesh.hi(j)));
    if (pieces.back() > kGrowthCap || !std::isfinite(pieces.back())) break;
  }
  return cauchy_test(std::move(pieces));
}

MeshTest feller_mesh_test(const ScaleSpeed& ss, const EndpointMesh& mesh, const MeshTest& scale) {
  const auto h = [&](double u) { return ss.scale_density(mesh.y(u)) * mesh.jacobian(u); };
  const auto speed = [&](double u) { return ss.speed_density(mesh.y(u)) * mesh.jacobian(u); };
  const int J = static_cast<int>(scale.pieces.size());
  // tails[j] = scale mass strictly nearer the endpoint than piece j.
  std::vector<double> tails(static_cast<std::size_t>(J) + 1, 0.0);
  tails[J] = geometric_tail(scale);
  for (int j = J - 1; j >= 0; --j) tails[j] = tails[j + 1] + scale.pieces[j];
  std::vector<double> pieces;
  for (int j = 1; j <= J; ++j) {
    const double a = mesh.lo(j), b = mesh.hi(j);
    const double tail = tails[j];
    const double inner_tol = std::max(1e-9 * scale.pieces[j - 1], 1e-300);
    const auto integrand = [&](double u) {
      const double inner = u > a ? adaptive_simpson(h, a, u, inner_tol, 30).value : 0.0;
      return (tail + inner) * speed(u);
    };
    const double guess =
        (tail + 0.5 * scale.pieces[j - 1]) * std::abs(speed(0.5 * (a + b))) * (b - a);
    const double tol = std::max(1e-7 * guess, 1e-300);
    pieces.push_back(adaptive_simpson(integrand, a, b, tol, 30).value);
    if (pieces.back() > kGrowthCap || !std::isfinite(pieces.back())) break;
  }
  return cauchy_test(std::move(pieces));
}

// Exponent alpha of s' ~ dist^-alpha over the last two decades of the mesh.
double fit_alpha(const ScaleSpeed& ss, const EndpointMesh& mesh) {
  const double u_min = mesh.lo(mesh.pieces);
  std::vector<double> dist, dens;
  constexpr int points = 21;
  for (int i = 0; i < points; ++i) {
    const double u = u_min * std::pow(10.0, 2.0 * i / (points - 1));
    dist.push_back(u);
    dens.push_back(ss.scale_density(mesh.y(u)));
  }
  return -loglog_slope(dist, dens);
}

std::optional<Accessibility> to_accessibility(Verdict feller) {
  if (feller == Verdict::Convergent) return Accessibility::Accessible;
  if (feller == Verdict::Divergent) return Accessibility::Inaccessible;
  return std::nullopt;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Convergent:
      return "convergent";
    case Verdict::Divergent:
      return "divergent";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

std::string to_string(Accessibility a) {
  switch (a) {
    case Accessibility::Accessible:
      return "accessible";
    case Accessibility::Inaccessible:
      return "inaccessible";
    case Accessibility::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

ScaleValue scale_function(const ScaleSpeed& ss, double x) {
  const Domain& D = ss.config().domain;
  const bool at_lower = x == D.lower;
  const bool at_upper = x == D.upper;
  if (!at_lower && !at_upper) return {ss.scale(x), false};
  const EndpointMesh mesh = make_mesh(ss, at_upper);
  const MeshTest t = scale_mesh_test(ss, mesh);
  const double sign = at_upper ? 1.0 : -1.0;
  if (t.verdict == Verdict::Divergent) return {sign * kInfinity, true};
  return {sign * (t.partial_sum + geometric_tail(t)), false};
}

ScaleValue scale_function(const ModelConfig& config, double x) {
  return scale_function(ScaleSpeed(config), x);
}

double speed_density(const ModelConfig& config, double x) {
  return ScaleSpeed(config).speed_density(x);
}

BoundaryEntry classify_boundary(const ScaleSpeed& ss, bool upper) {
  const Domain& D = ss.config().domain;
  BoundaryEntry e;
  e.endpoint = upper ? "upper" : "lower";
  e.location = upper ? D.upper : D.lower;
  e.kind = upper ? D.upper_kind : D.lower_kind;
  const EndpointMesh mesh = make_mesh(ss, upper);

  e.scale_limit = scale_mesh_test(ss, mesh);
  if (e.scale_limit.verdict == Verdict::Divergent) {
    e.feller_integral.verdict = Verdict::Divergent;
  } else {
    e.feller_integral = feller_mesh_test(ss, mesh, e.scale_limit);
  }
  if (!mesh.infinite) {
    e.alpha = fit_alpha(ss, mesh);
    e.alpha_verdict =
        *e.alpha >= 1.0 - 0.01 ? Accessibility::Inaccessible : Accessibility::Accessible;
  }

  if (e.scale_limit.verdict == Verdict::Divergent) {
    e.classification = Accessibility::Inaccessible;
    e.reason = "scale limit infinite";
    return e;
  }
  const auto feller = to_accessibility(e.feller_integral.verdict);
  const bool alpha_decisive = e.alpha && std::abs(*e.alpha - 1.0) > 0.1;
  if (feller && e.alpha_verdict) {
    if (*feller == *e.alpha_verdict) {
      e.classification = *feller;
      e.reason = "feller integral and exponent agree";
    } else if (alpha_decisive) {
      e.classification = *e.alpha_verdict;
      e.reason = "prongs disagree; exponent decides";
    } else {
      e.classification = Accessibility::Inconclusive;
      e.reason = "prongs disagree near alpha = 1";
    }
  } else if (feller) {
    e.classification = *feller;
    e.reason = "feller integral";
  } else if (alpha_decisive) {
    e.classification = *e.alpha_verdict;
    e.reason = "feller integral inconclusive; exponent decides";
  } else {
    e.classification = Accessibility::Inconclusive;
    e.reason = "no prong is decisive";
  }
  return e;
}

BoundaryEntry classify_boundary(const ModelConfig& config, bool upper) {
  return classify_boundary(ScaleSpeed(config), upper);
}

BoundaryReport classify_boundaries(const ModelConfig& config) {
  const ScaleSpeed ss(config);
  BoundaryReport r;
  r.scenario = config.name;
  r.radial_convention = to_string(config.radial);
  r.endpoints.push_back(classify_boundary(ss, false));
  r.endpoints.push_back(classify_boundary(ss, true));
  return r;
}

nlohmann::ordered_json to_json(const BoundaryEntry& e) {
  nlohmann::ordered_json j;
  j["endpoint"] = e.endpoint;
  if (std::isfinite(e.location)) {
    j["location"] = e.location;
  } else {
    j["location"] = nullptr;
  }
  j["kind"] = to_string(e.kind);
  j["scale_limit"] = to_string(e.scale_limit.verdict);
  j["feller_integral"] = to_string(e.feller_integral.verdict);
  if (e.alpha) {
    j["alpha"] = *e.alpha;
  } else {
    j["alpha"] = nullptr;
  }
  j["classification"] = to_string(e.classification);
  j["reason"] = e.reason;
  j["scale_partial_sum"] = e.scale_limit.partial_sum;
  j["scale_median_ratio"] = e.scale_limit.median_ratio;
  j["feller_partial_sum"] = e.feller_integral.partial_sum;
  j["feller_median_ratio"] = e.feller_integral.median_ratio;
  return j;
}

nlohmann::ordered_json to_json(const BoundaryReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["radial_convention"] = r.radial_convention;
  j["endpoints"] = nlohmann::ordered_json::array();
  for (const auto& e : r.endpoints) j["endpoints"].push_back(to_json(e));
  return j;
}

double hitting_probability(const ScaleSpeed& ss, double x, double l, double u) {
  const Domain& D = ss.config().domain;
  if (!(l < u)) throw DomainError("hitting_probability: degenerate band");
  if (!D.contains_open(l) || !D.contains_open(u) || x < l || x > u) {
    throw DomainError("hitting_probability: need l <= x <= u inside the open domain");
  }
  const auto f = [&](double y) { return ss.scale_density(y); };
  if (x == l) return 0.0;
  if (x == u) return 1.0;
  const double num = integrate_adaptive(f, l, x, 1e-13).value;
  const double den = num + integrate_adaptive(f, x, u, 1e-13).value;
  return std::clamp(num / den, 0.0, 1.0);
}

double hitting_probability(const ModelConfig& config, double x, double l, double u) {
  return hitting_probability(ScaleSpeed(config), x, l, u);
}

}  // namespace rflight
