#include <cmath>
#include <map>

#include "rflight/errors.hpp"
#include "rflight/model.hpp"

namespace rflight {

ModelConfig scenario_free(double energy, double mass, int dim) {
  ModelConfig c;
  c.name = "free";
  c.potential = PotentialSpec::free();
  c.density = DensitySpec::constant(1.0);
  c.mass = mass;
  c.energy = energy;
  c.dim = dim;
  c.domain = {0.0, kInfinity, EndpointKind::Origin, EndpointKind::Infinity};
  return c;
}

ModelConfig scenario_heuristic(int dim) {
  ModelConfig c = scenario_constant_force(1.0, 1.0, 2.0, dim);
  c.name = "heuristic-1.2";
  return c;
}

ModelConfig scenario_constant_force(double force, double energy, double mass, int dim) {
  if (!(force > 0.0) || !(energy > 0.0)) {
    throw ConfigError("constant-force scenario needs C > 0 and E > 0");
  }
  ModelConfig c;
  c.name = "constant-force";
  c.potential = PotentialSpec::constant_force(force);
  c.density = DensitySpec::constant(1.0);
  c.mass = mass;
  c.energy = energy;
  c.dim = dim;
  c.domain = {0.0, energy / force, EndpointKind::Origin, EndpointKind::Wall};
  return c;
}

ModelConfig scenario_newtonian(double k, double energy, double mass, int dim) {
  if (!(k > 0.0) || !(energy > 0.0)) {
    throw ConfigError("newtonian scenario needs k > 0 and E > 0");
  }
  ModelConfig c;
  c.name = "newtonian";
  c.potential = PotentialSpec::newtonian(k);
  c.density = DensitySpec::constant(1.0);
  c.mass = mass;
  c.energy = energy;
  c.dim = dim;
  c.domain = {0.0, kInfinity, EndpointKind::Origin, EndpointKind::Infinity};
  return c;
}

ModelConfig scenario_harmonic(double a, double energy, double mass, int dim) {
  if (!(a > 0.0) || !(energy > 0.0)) {
    throw ConfigError("harmonic scenario needs a > 0 and E > 0");
  }
  ModelConfig c;
  c.name = "harmonic";
  c.potential = PotentialSpec::harmonic(a);
  c.density = DensitySpec::constant(1.0);
  c.mass = mass;
  c.energy = energy;
  c.dim = dim;
  c.domain = {0.0, std::sqrt(energy / a), EndpointKind::Origin, EndpointKind::Wall};
  return c;
}

ModelConfig with_linear_density(ModelConfig config, double beta, double g0) {
  config.density = DensitySpec::linear(g0, beta);
  return config;
}

std::vector<std::string> scenario_names() {
  return {"free", "heuristic-1.2", "constant-force", "newtonian", "harmonic"};
}

ModelConfig make_scenario(const std::string& name,
                          const std::vector<std::pair<std::string, double>>& params, int dim) {
  std::map<std::string, double> p(params.begin(), params.end());
  auto take = [&](const std::string& key, double fallback) {
    auto it = p.find(key);
    if (it == p.end()) return fallback;
    const double v = it->second;
    p.erase(it);
    return v;
  };
  ModelConfig c;
  if (name == "free") {
    const double e = take("E", 1.0);
    const double m = take("m", 2.0);
    c = scenario_free(e, m, dim);
  } else if (name == "heuristic-1.2") {
    c = scenario_heuristic(dim);
  } else if (name == "constant-force") {
    const double force = take("C", 1.0);
    const double e = take("E", 1.0);
    const double m = take("m", 2.0);
    c = scenario_constant_force(force, e, m, dim);
  } else if (name == "newtonian") {
    const double k = take("k", 1.0);
    const double e = take("E", 1.0);
    const double m = take("m", 2.0);
    c = scenario_newtonian(k, e, m, dim);
  } else if (name == "harmonic") {
    const double a = take("a", 1.0);
    const double e = take("E", 4.0);
    const double m = take("m", 2.0);
    c = scenario_harmonic(a, e, m, dim);
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  const bool has_beta = p.count("beta") > 0;
  const double beta = take("beta", 0.0);
  const double g0 = take("g0", 1.0);
  if (has_beta || g0 != 1.0) c = with_linear_density(c, beta, g0);
  if (!p.empty()) {
    throw ConfigError("scenario '" + name + "' does not take parameter '" + p.begin()->first + "'");
  }
  return c;
}

}  // namespace rflight
