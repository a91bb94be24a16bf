#pragma once

#include <ostream>
#include <span>
#include <vector>

#include "rflight/chain.hpp"
#include "rflight/ks.hpp"
#include "rflight/model.hpp"
#include "rflight/rng.hpp"

namespace rflight {

/// Scaled single-step moments from a fixed launch point. Components are
/// (X_1, ..., X_d, T); matrices are row-major (d+1) x (d+1).
struct ChainMoments {
  std::vector<double> x;
  double n = 1.0;
  int dim = 0;
  std::size_t count = 0;
  std::size_t failures = 0;
  std::vector<double> drift;
  std::vector<double> drift_se;
  std::vector<double> cov;
  std::vector<double> cov_se;
  std::vector<double> scaled_free_times;  // n^{1/4} N per sample
  ConservationStats conservation;

  double cov_at(int i, int j) const { return cov[static_cast<std::size_t>(i * (dim + 1) + j)]; }
  double cov_se_at(int i, int j) const {
    return cov_se[static_cast<std::size_t>(i * (dim + 1) + j)];
  }
};

struct TheoreticalMoments {
  int dim = 0;
  std::vector<double> drift;
  std::vector<double> cov;

  double cov_at(int i, int j) const { return cov[static_cast<std::size_t>(i * (dim + 1) + j)]; }
};

/// Runs sample_count single steps from (x, 0); sample i uses
/// rng.substream(i). mu = n mean(increment), sigma^2 = n mean(outer
/// product). Failed flights are counted and skipped.
ChainMoments estimate_chain_moments(std::span<const double> x, const ModelConfig& config,
                                    std::size_t sample_count, const RngStream& rng,
                                    int workers = 1);

/// Drift -(1/(d g^2)) [(d-1) grad U / (m v^2) + grad g / g], time drift
/// 1/(g v), spatial covariance c/g^2 per the covariance convention.
TheoreticalMoments theoretical_moments(std::span<const double> x, const ModelConfig& config);

struct LadderRow {
  double n = 1.0;
  ChainMoments moments;
  TheoreticalMoments theory;
  double drift_discrepancy = 0.0;  // sup over components
  double drift_discrepancy_se = 0.0;
  double cov_discrepancy = 0.0;
  double cov_discrepancy_se = 0.0;
  double ks_distance = 0.0;  // n^{1/4} N against Exp(g v)
};

struct LadderResult {
  std::vector<LadderRow> rows;
};

/// Every rung uses the same rng, so sample i sees the same direction and
/// hazard target at every n.
LadderResult convergence_ladder(std::span<const double> x, const ModelConfig& config,
                                std::span<const double> n_values, std::size_t sample_count,
                                const RngStream& rng, int workers = 1);

/// CSV with columns n, component, estimate, se, limit, abs_err.
void write_ladder_csv(const LadderResult& ladder, std::ostream& out);

/// Component labels: drift_x1.., drift_t, cov_x1_x1, ..., cov_t_t.
std::vector<std::string> ladder_component_names(int dim);

/// Least-squares slope of log y on log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct EnergyDistanceResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int permutations = 0;
};

/// Two-sample energy-distance permutation test; p = (1 + #{T* >= T}) / (1 + P).
/// Samples are rows of equal dimension. Permutation p uses rng.substream(p).
EnergyDistanceResult energy_distance_test(const std::vector<std::vector<double>>& a,
                                          const std::vector<std::vector<double>>& b,
                                          int permutations, const RngStream& rng,
                                          int workers = 1);

struct MeanComparison {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double se_a = 0.0;
  double se_b = 0.0;
  double pooled_se = 0.0;
  double z = 0.0;  // (mean_a - mean_b) / pooled_se
};

MeanComparison compare_means(std::span<const double> a, std::span<const double> b);

}  // namespace rflight
