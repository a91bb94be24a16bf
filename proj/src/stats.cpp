#include "rflight/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

#include "rflight/collision.hpp"
#include "rflight/errors.hpp"
#include "rflight/parallel.hpp"

namespace rflight {

namespace {

struct SingleStep {
  bool ok = false;
  std::vector<double> increment;  // (dX, dT)
  FlightResult flight;
};

}  // namespace

ChainMoments estimate_chain_moments(std::span<const double> x, const ModelConfig& config,
                                    std::size_t sample_count, const RngStream& rng,
                                    int workers) {
  const int d = config.dim;
  const std::size_t k = static_cast<std::size_t>(d) + 1;
  auto samples = parallel_map(sample_count, workers, [&](std::size_t i) {
    SingleStep s;
    RngStream stream = rng.substream(i);
    try {
      StepOutcome out = step(x, 0.0, config, stream);
      s.increment.resize(k);
      for (int j = 0; j < d; ++j) s.increment[j] = out.x[j] - x[j];
      s.increment[d] = out.t_scaled;
      s.flight = std::move(out.flight);
      s.flight.segment = {};
      s.ok = true;
    } catch (const NumericError&) {
      s.ok = false;
    }
    return s;
  });

  ChainMoments m;
  m.x.assign(x.begin(), x.end());
  m.n = config.n;
  m.dim = d;
  m.drift.assign(k, 0.0);
  m.drift_se.assign(k, 0.0);
  m.cov.assign(k * k, 0.0);
  m.cov_se.assign(k * k, 0.0);
  std::vector<double> s1(k, 0.0), s2(k, 0.0), c1(k * k, 0.0), c2(k * k, 0.0);
  const double n = config.n;
  const double nq = std::pow(n, 0.25);
  for (const auto& s : samples) {
    if (!s.ok) {
      ++m.failures;
      continue;
    }
    ++m.count;
    m.conservation.add(s.flight, config.numerics.invariant_tol);
    m.scaled_free_times.push_back(nq * s.flight.duration);
    for (std::size_t i = 0; i < k; ++i) {
      const double a = n * s.increment[i];
      s1[i] += a;
      s2[i] += a * a;
      for (std::size_t j = 0; j < k; ++j) {
        const double b = n * s.increment[i] * s.increment[j];
        c1[i * k + j] += b;
        c2[i * k + j] += b * b;
      }
    }
  }
  if (m.count == 0) return m;
  const double c = static_cast<double>(m.count);
  auto se = [&](double sum, double sum2) {
    const double mean = sum / c;
    const double var = m.count > 1 ? std::max(0.0, (sum2 - c * mean * mean) / (c - 1.0)) : 0.0;
    return std::sqrt(var / c);
  };
  for (std::size_t i = 0; i < k; ++i) {
    m.drift[i] = s1[i] / c;
    m.drift_se[i] = se(s1[i], s2[i]);
  }
  for (std::size_t i = 0; i < k * k; ++i) {
    m.cov[i] = c1[i] / c;
    m.cov_se[i] = se(c1[i], c2[i]);
  }
  return m;
}

TheoreticalMoments theoretical_moments(std::span<const double> x, const ModelConfig& config) {
  const int d = config.dim;
  const double r = norm(x);
  if (!config.domain.contains_open(r)) {
    throw DomainError("theoretical_moments: |x| outside the open domain");
  }
  const double g = config.g(r);
  const double v = speed(config, r);
  const double mv2 = config.mass * v * v;
  const double radial =
      -(1.0 / (d * g * g)) * ((d - 1) * config.dU(r) / mv2 + config.dg(r) / g);
  TheoreticalMoments t;
  t.dim = d;
  const std::size_t k = static_cast<std::size_t>(d) + 1;
  t.drift.assign(k, 0.0);
  for (int i = 0; i < d; ++i) t.drift[i] = radial * x[i] / r;
  t.drift[d] = 1.0 / (g * v);
  t.cov.assign(k * k, 0.0);
  const double c = config.covariance_constant() / (g * g);
  for (int i = 0; i < d; ++i) t.cov[i * k + i] = c;
  return t;
}

LadderResult convergence_ladder(std::span<const double> x, const ModelConfig& config,
                                std::span<const double> n_values, std::size_t sample_count,
                                const RngStream& rng, int workers) {
  LadderResult out;
  for (double n : n_values) {
    const ModelConfig cfg = with_scaling(config, n);
    LadderRow row;
    row.n = n;
    row.moments = estimate_chain_moments(x, cfg, sample_count, rng, workers);
    row.theory = theoretical_moments(x, cfg);
    const std::size_t k = row.theory.drift.size();
    for (std::size_t i = 0; i < k; ++i) {
      const double e = std::abs(row.moments.drift[i] - row.theory.drift[i]);
      if (e >= row.drift_discrepancy) {
        row.drift_discrepancy = e;
        row.drift_discrepancy_se = row.moments.drift_se[i];
      }
    }
    for (std::size_t i = 0; i < k * k; ++i) {
      const double e = std::abs(row.moments.cov[i] - row.theory.cov[i]);
      if (e >= row.cov_discrepancy) {
        row.cov_discrepancy = e;
        row.cov_discrepancy_se = row.moments.cov_se[i];
      }
    }
    const double r = norm(x);
    const double rate = cfg.g(r) * speed(cfg, r);
    if (row.moments.scaled_free_times.size() >= 20) {
      row.ks_distance = ks_statistic(row.moments.scaled_free_times, [rate](double t) {
                          return t <= 0.0 ? 0.0 : -std::expm1(-rate * t);
                        }).statistic;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<std::string> ladder_component_names(int dim) {
  std::vector<std::string> labels;
  for (int i = 0; i < dim; ++i) labels.push_back("x" + std::to_string(i + 1));
  labels.push_back("t");
  std::vector<std::string> names;
  for (const auto& l : labels) names.push_back("drift_" + l);
  for (const auto& a : labels) {
    for (const auto& b : labels) names.push_back("cov_" + a + "_" + b);
  }
  return names;
}

void write_ladder_csv(const LadderResult& ladder, std::ostream& out) {
  out << "n,component,estimate,se,limit,abs_err\n";
  out << std::setprecision(17);
  for (const auto& row : ladder.rows) {
    const auto names = ladder_component_names(row.theory.dim);
    const std::size_t k = row.theory.drift.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
      double est, se, lim;
      if (i < k) {
        est = row.moments.drift[i];
        se = row.moments.drift_se[i];
        lim = row.theory.drift[i];
      } else {
        est = row.moments.cov[i - k];
        se = row.moments.cov_se[i - k];
        lim = row.theory.cov[i - k];
      }
      out << row.n << "," << names[i] << "," << est << "," << se << "," << lim << ","
          << std::abs(est - lim) << "\n";
    }
  }
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope: need two points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_slope: non-positive value");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

// Sum over pairs i<j within a labeled subset, via one sorted pass (1-D).
double energy_statistic_1d(const std::vector<double>& sorted, const std::vector<char>& in_a,
                           std::size_t n1, std::size_t n2) {
  double sum_a = 0.0, sum_b = 0.0, sum_all = 0.0;
  double pa = 0.0, pb = 0.0, pall = 0.0;
  std::size_t ca = 0, cb = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double z = sorted[i];
    sum_all += z * static_cast<double>(i) - pall;
    pall += z;
    if (in_a[i]) {
      sum_a += z * static_cast<double>(ca) - pa;
      pa += z;
      ++ca;
    } else {
      sum_b += z * static_cast<double>(cb) - pb;
      pb += z;
      ++cb;
    }
  }
  const double cross = sum_all - sum_a - sum_b;
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  return (a * b / (a + b)) * (2.0 * cross / (a * b) - 2.0 * sum_a / (a * a) - 2.0 * sum_b / (b * b));
}

}  // namespace

EnergyDistanceResult energy_distance_test(const std::vector<std::vector<double>>& a,
                                          const std::vector<std::vector<double>>& b,
                                          int permutations, const RngStream& rng, int workers) {
  const std::size_t n1 = a.size(), n2 = b.size();
  if (n1 < 2 || n2 < 2) throw DomainError("energy_distance_test: need two samples per group");
  const std::size_t dim = a.front().size();
  const std::size_t n = n1 + n2;
  std::vector<const std::vector<double>*> pooled;
  pooled.reserve(n);
  for (const auto& r : a) pooled.push_back(&r);
  for (const auto& r : b) pooled.push_back(&r);
  for (const auto* r : pooled) {
    if (r->size() != dim) throw DomainError("energy_distance_test: dimension mismatch");
  }

  // Labels for the observed split and for each permutation.
  auto permuted_labels = [&](int p) {
    std::vector<char> lab(n, 0);
    std::fill(lab.begin(), lab.begin() + static_cast<std::ptrdiff_t>(n1), 1);
    if (p < 0) return lab;
    RngStream s = rng.substream(static_cast<std::uint64_t>(p));
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(s.next_u64() % (i + 1));
      std::swap(lab[i], lab[j]);
    }
    return lab;
  };

  std::function<double(const std::vector<char>&)> statistic;
  std::vector<double> sorted_values;
  std::vector<std::size_t> order;
  std::vector<float> dist;
  std::vector<double> row_sum;
  if (dim == 1) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return (*pooled[i])[0] < (*pooled[j])[0]; });
    sorted_values.resize(n);
    for (std::size_t i = 0; i < n; ++i) sorted_values[i] = (*pooled[order[i]])[0];
    statistic = [&](const std::vector<char>& lab) {
      std::vector<char> in_a(n);
      for (std::size_t i = 0; i < n; ++i) in_a[i] = lab[order[i]];
      return energy_statistic_1d(sorted_values, in_a, n1, n2);
    };
  } else {
    // Packed upper triangle: row i holds distances to j > i.
    dist.resize(n * (n - 1) / 2);
    row_sum.assign(n, 0.0);
    std::size_t off = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& xi = *pooled[i];
      double rs = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto& xj = *pooled[j];
        double s = 0.0;
        for (std::size_t c = 0; c < dim; ++c) s += (xi[c] - xj[c]) * (xi[c] - xj[c]);
        const float dij = static_cast<float>(std::sqrt(s));
        dist[off++] = dij;
        rs += dij;
      }
      row_sum[i] = rs;
    }
    statistic = [&](const std::vector<char>& lab) {
      std::vector<float> w(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = lab[i] ? 1.0f : 0.0f;
      double sum_a = 0.0, sum_b = 0.0, cross = 0.0;
      std::size_t off2 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t len = n - i - 1;
        const float* row = dist.data() + off2;
        const float* wr = w.data() + i + 1;
        double s1 = 0.0;
        float acc = 0.0f;
        // Blocked float accumulation keeps this vectorizable and deterministic.
        for (std::size_t j = 0; j < len; ++j) {
          acc += row[j] * wr[j];
          if ((j & 255) == 255) {
            s1 += acc;
            acc = 0.0f;
          }
        }
        s1 += acc;
        if (lab[i]) {
          sum_a += s1;
          cross += row_sum[i] - s1;
        } else {
          cross += s1;
          sum_b += row_sum[i] - s1;
        }
        off2 += len;
      }
      const double x1 = static_cast<double>(n1), x2 = static_cast<double>(n2);
      return (x1 * x2 / (x1 + x2)) *
             (2.0 * cross / (x1 * x2) - 2.0 * sum_a / (x1 * x1) - 2.0 * sum_b / (x2 * x2));
    };
  }

  EnergyDistanceResult result;
  result.permutations = permutations;
  result.statistic = statistic(permuted_labels(-1));
  const auto stats = parallel_map(static_cast<std::size_t>(std::max(permutations, 0)), workers,
                                  [&](std::size_t p) {
                                    return statistic(permuted_labels(static_cast<int>(p)));
                                  });
  std::size_t at_least = 0;
  for (double s : stats) {
    if (s >= result.statistic) ++at_least;
  }
  result.p_value = (1.0 + static_cast<double>(at_least)) / (1.0 + permutations);
  return result;
}

MeanComparison compare_means(std::span<const double> a, std::span<const double> b) {
  auto moments = [](std::span<const double> v, double& mean, double& se) {
    const double n = static_cast<double>(v.size());
    mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  };
  if (a.empty() || b.empty()) throw DomainError("compare_means: empty sample");
  MeanComparison c;
  moments(a, c.mean_a, c.se_a);
  moments(b, c.mean_b, c.se_b);
  c.pooled_se = std::sqrt(c.se_a * c.se_a + c.se_b * c.se_b);
  c.z = c.pooled_se > 0.0 ? (c.mean_a - c.mean_b) / c.pooled_se : 0.0;
  return c;
}

}  // namespace rflight
