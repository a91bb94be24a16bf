#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rflight/model.hpp"

namespace rflight {

/*
 * Scale and speed densities of the radial diffusion
 *   s'(y) = K g(y)^q / (y^kappa (E - U(y))^p),   m'(y) = 2 / (sigma_r^2(y) s'(y)),
 * with p = (d-1)/(d c), q = 2/(d c), sigma_r^2 = c/g^2 and kappa the Bessel
 * weight of the radial convention. K normalizes s'(a) = 1; s(c) = 0.
 */
class ScaleSpeed {
 public:
  explicit ScaleSpeed(const ModelConfig& config);
  ScaleSpeed(const ModelConfig& config, double a, double c);

  const ModelConfig& config() const { return config_; }
  double a() const { return a_; }
  double c() const { return c_; }
  double kappa() const { return kappa_; }

  double scale_density(double y) const;
  /// Throws DomainError outside the open domain.
  double speed_density(double x) const;
  double sigma_r2(double x) const;
  /// Drift of the radial diffusion.
  double radial_drift(double x) const;
  /// B(y) = int_a^y 2 mu_r / sigma_r^2 by quadrature; s' = exp(-B).
  double B(double y) const;
  /// s(x) = int_c^x s' for interior x.
  double scale(double x) const;

 private:
  ModelConfig config_;
  double a_ = 0.0;
  double c_ = 0.0;
  double kappa_ = 0.0;
  double p_ = 0.0;
  double q_ = 0.0;
  double log_norm_ = 0.0;
};

/// Default reference point: midpoint of a finite domain, lower + 1 otherwise.
double default_reference_point(const ModelConfig& config);

struct ScaleValue {
  double value = 0.0;
  bool divergent = false;
};

/// s(x); at an endpoint the limit is taken on the geometric mesh and a
/// divergent limit returns a signed infinity with the divergence flag.
ScaleValue scale_function(const ScaleSpeed& ss, double x);
ScaleValue scale_function(const ModelConfig& config, double x);

double speed_density(const ModelConfig& config, double x);

enum class Verdict { Convergent, Divergent, Inconclusive };
enum class Accessibility { Accessible, Inaccessible, Inconclusive };

std::string to_string(Verdict v);
std::string to_string(Accessibility a);

struct MeshTest {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<double> pieces;  // integrals over the mesh pieces, far to near
  double partial_sum = 0.0;
  double median_ratio = 0.0;
};

struct BoundaryEntry {
  std::string endpoint;  // "lower" or "upper"
  double location = 0.0;
  EndpointKind kind = EndpointKind::Origin;
  MeshTest scale_limit;
  MeshTest feller_integral;
  std::optional<double> alpha;  // local exponent of s' at a finite endpoint
  std::optional<Accessibility> alpha_verdict;
  Accessibility classification = Accessibility::Inconclusive;
  std::string reason;
};

struct BoundaryReport {
  std::string scenario;
  std::string radial_convention;
  std::vector<BoundaryEntry> endpoints;
};

/// Three prongs: Cauchy test of the scale integral on a geometric mesh,
/// the Feller integral int (int m') s' on the same mesh, and the fitted
/// exponent alpha of s' over the last two mesh decades (alpha >= 1 means
/// inaccessible). A divergent scale limit always means inaccessible.
BoundaryEntry classify_boundary(const ScaleSpeed& ss, bool upper);
BoundaryEntry classify_boundary(const ModelConfig& config, bool upper);
BoundaryReport classify_boundaries(const ModelConfig& config);

nlohmann::ordered_json to_json(const BoundaryEntry& entry);
nlohmann::ordered_json to_json(const BoundaryReport& report);

/// P(hit u before l | start x) = (s(x) - s(l)) / (s(u) - s(l)).
double hitting_probability(const ScaleSpeed& ss, double x, double l, double u);
double hitting_probability(const ModelConfig& config, double x, double l, double u);

}  // namespace rflight
