#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rflight {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class PotentialKind { ConstantForce, Newtonian, Free, Harmonic, Expression, Callable };

/// Radial potential U(r) with its derivative.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::Free;
  std::vector<double> params;
  std::string expression;  // source text for Expression potentials
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  // U(r) -> -inf as r -> 0 (validation keeps away from the origin).
  bool singular_at_origin = false;

  double operator()(double r) const { return value(r); }

  static PotentialSpec constant_force(double c);
  static PotentialSpec newtonian(double k);
  static PotentialSpec free();
  static PotentialSpec harmonic(double a);
  static PotentialSpec from_expression(const std::string& text, bool singular_at_origin = false);
  static PotentialSpec callable(std::function<double(double)> u,
                                std::function<double(double)> du,
                                bool singular_at_origin = false);
};

/// Scatterer density g(r) > 0 with its derivative.
struct DensitySpec {
  std::string description = "constant";
  std::vector<double> params;
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  double operator()(double r) const { return value(r); }

  static DensitySpec constant(double g0);
  /// g(r) = g0 (1 + beta r).
  static DensitySpec linear(double g0, double beta);
  static DensitySpec from_expression(const std::string& text);
  static DensitySpec callable(std::function<double(double)> g,
                              std::function<double(double)> dg);
};

enum class EndpointKind { Origin, Wall, Infinity, Truncated };

std::string to_string(EndpointKind kind);

struct Domain {
  double lower = 0.0;
  double upper = kInfinity;
  EndpointKind lower_kind = EndpointKind::Origin;
  EndpointKind upper_kind = EndpointKind::Infinity;

  bool contains_open(double r) const { return r > lower && r < upper; }
  bool contains_closed(double r) const { return r >= lower && r <= upper; }
};

/// Radial drift convention: Ito projection of the d-dimensional diffusion
/// ((d-1)/r Bessel term) or the printed single 1/r term.
enum class RadialConvention { Ito, AsPrinted };

/// Spatial covariance limit: 2/(d g^2) or (d-1)/(d g^2).
enum class CovarianceConvention { TwoOverD, DMinusOneOverD };

std::string to_string(RadialConvention c);
std::string to_string(CovarianceConvention c);

struct Numerics {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double origin_eps = 1e-9;       // times the length scale
  double v_cap = 1e6;             // model speed allowed at an origin crossing
  double t_max = 1e6;             // flight duration cap (model time)
  double invariant_tol = 1e-8;    // energy / angular momentum drift budget
  std::size_t validation_grid = 10000;
  double singular_eps = 1e-6;     // excluded neighborhood of a singular origin, times min(h+, r_max)
  double r_max = 100.0;           // validation truncation when h+ is infinite
};

struct ModelConfig {
  PotentialSpec potential;
  DensitySpec density;
  double mass = 1.0;
  double energy = 1.0;
  int dim = 3;
  double n = 1.0;
  Domain domain;
  Numerics numerics;
  RadialConvention radial = RadialConvention::Ito;
  CovarianceConvention covariance = CovarianceConvention::TwoOverD;
  std::string name = "custom";

  double U(double r) const { return potential.value(r); }
  double dU(double r) const { return potential.derivative(r); }
  double g(double r) const { return density.value(r); }
  double dg(double r) const { return density.derivative(r); }
  /// E - U(r), the kinetic energy available at radius r.
  double kinetic(double r) const { return energy - potential.value(r); }
  /// Length scale used for origin and validation tolerances.
  double length_scale() const;
  /// Coefficient c with spatial covariance c / g^2.
  double covariance_constant() const;
};

ModelConfig with_scaling(ModelConfig config, double n);

/// v(r) = sqrt(2 (E - U(r)) / m). Throws DomainError outside the closed
/// domain or where E - U < 0.
double speed(const ModelConfig& config, double r);
/// v_n(r) = n^{-1/4} v(r).
double scaled_speed(const ModelConfig& config, double r);
/// Scaled collision rate g_n v_n = n^{1/4} g v.
double scaled_hazard(const ModelConfig& config, double r);

struct SearchInterval {
  double lower = 0.0;
  double upper = kInfinity;
};

/// Maximal interval around `seed` on which E - U > 0. Walls are located by
/// bracketed root finding to 1e-12. Endpoints not bounded by a wall are
/// Origin (lower search edge 0), Infinity (upper search edge infinite) or
/// Truncated (finite search edge). Throws DomainError when E - U <= 0 at
/// the seed.
Domain domain_from_potential(const PotentialSpec& potential, double energy, double mass,
                             SearchInterval search, double seed);

struct AssumptionCheck {
  std::string name;
  bool passed = true;
  std::optional<double> witness;
  std::string detail;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  bool all_passed() const;
  const AssumptionCheck* find(const std::string& name) const;
  std::string summary() const;
};

/// Grid checks of the scaling identities (A1), positivity of E - U (A2),
/// wall and far-field conditions (A3), derivative consistency (A4) and
/// positivity of g (A5). Never throws; failures carry a witness radius.
ValidationReport validate_assumptions(const ModelConfig& config);

// Scenario library.
ModelConfig scenario_free(double energy = 1.0, double mass = 2.0, int dim = 3);
/// m = 2, U(r) = r, g = 1, E = 1 on D = [0, 1].
ModelConfig scenario_heuristic(int dim = 3);
ModelConfig scenario_constant_force(double c = 1.0, double energy = 1.0, double mass = 2.0,
                                    int dim = 3);
ModelConfig scenario_newtonian(double k = 1.0, double energy = 1.0, double mass = 2.0,
                               int dim = 3);
ModelConfig scenario_harmonic(double a = 1.0, double energy = 4.0, double mass = 2.0,
                              int dim = 3);
/// Replace g by g0 (1 + beta r).
ModelConfig with_linear_density(ModelConfig config, double beta, double g0 = 1.0);

std::vector<std::string> scenario_names();
/// Builds a named scenario; params keys depend on the scenario
/// (C, k, a, E, m, beta). Throws ConfigError for unknown names.
ModelConfig make_scenario(const std::string& name,
                          const std::vector<std::pair<std::string, double>>& params, int dim);

}  // namespace rflight
