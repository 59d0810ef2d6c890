#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tspca/asymcov.hpp"
#include "tspca/bootstrap.hpp"
#include "tspca/dgp.hpp"
#include "tspca/eigensystem.hpp"
#include "tspca/error.hpp"
#include "tspca/parallel.hpp"
#include "tspca/rng.hpp"
#include "tspca/series.hpp"
#include "tspca/spectral.hpp"

namespace tspca {

/// Standard deviations attributed to one method (or to the empirical
/// distribution). Loadings are component-by-variable.
struct MethodSd {
  Vector values;
  Matrix loadings;
  Vector r;
  /// n * Cov(l_k, l_k'); empty when the method does not provide it.
  Matrix cov_values;
};

struct MonteCarloOptions {
  std::size_t threads = 1;
  /// Also run the plug-in estimator (AD engine) on every replicate.
  bool direct = false;
  std::optional<std::size_t> bandwidth;
  /// Also run the block bootstrap on every replicate.
  std::optional<MBBConfig> bootstrap;
  double max_failure_rate = 0.01;
};

/// Empirical distribution of the sample eigenstructure over N simulated
/// series, with replicate eigenvectors sign-aligned to the population ones.
struct MonteCarloSummary {
  std::size_t replicates = 0;
  std::size_t failed_replicates = 0;
  std::size_t n = 0;
  /// Covariance of sqrt(n) (l - lambda) across replicates (divisor N - 1).
  Matrix empirical_cov_values;
  Vector empirical_sd_values;
  Matrix empirical_sd_loadings;
  Vector empirical_sd_r;
  Vector mean_values;
  Matrix mean_loadings;
  Vector mean_r;
  PopulationTruth truth;
  /// Mean over replicates of the per-replicate standard deviations.
  std::optional<MethodSd> direct;
  std::optional<MethodSd> bootstrap;

  [[nodiscard]] MethodSd empirical() const {
    return {empirical_sd_values, empirical_sd_loadings, empirical_sd_r, empirical_cov_values};
  }
};

namespace detail {

struct ReplicateRecord {
  bool ok = false;
  std::string error;
  Vector values;
  Matrix loadings;
  Vector r;
  std::optional<StandardErrors> direct;
  std::optional<BootstrapResult> bootstrap;
};

inline constexpr std::uint64_t kSimulationStream = 0x73696d;
inline constexpr std::uint64_t kBootstrapStream = 0x626f6f74;

inline MethodSd average_sds(const std::vector<ReplicateRecord>& records, bool use_direct) {
  MethodSd out;
  double count = 0.0;
  for (const auto& rec : records) {
    if (!rec.ok) continue;
    Vector v, r;
    Matrix a;
    if (use_direct) {
      v = rec.direct->sd_values, a = rec.direct->sd_loadings, r = rec.direct->sd_r;
    } else {
      v = rec.bootstrap->sd_values, a = rec.bootstrap->sd_loadings, r = rec.bootstrap->sd_r;
    }
    if (count == 0.0) {
      out.values = v, out.loadings = a, out.r = r;
    } else {
      out.values += v, out.loadings += a, out.r += r;
    }
    count += 1.0;
  }
  out.values /= count, out.loadings /= count, out.r /= count;
  return out;
}

}  // namespace detail

/// Simulates N series of length n, eigendecomposes each sample covariance,
/// aligns eigenvector signs with the population eigenvectors and aggregates
/// standard deviations with divisor N - 1. Replicate i draws from a stream
/// keyed by (seed, i), so results do not depend on the thread count.
[[nodiscard]] inline MonteCarloSummary run_monte_carlo(const DGPSpec& spec, std::size_t n, std::size_t replicates,
                                                       std::uint64_t seed, const MonteCarloOptions& opts = {}) {
  if (replicates < 2) throw InvalidArgument("run_monte_carlo: need at least 2 replicates");
  if (n < 2) throw InvalidArgument("run_monte_carlo: need n >= 2");
  MonteCarloSummary s;
  s.truth = population_truth(spec);
  s.n = n;
  const auto p = static_cast<Eigen::Index>(spec.p());
  const Matrix& phi = s.truth.decomp.vectors;

  std::vector<detail::ReplicateRecord> records(replicates);
  parallel_for(replicates, opts.threads, [&](std::size_t i) {
    auto& rec = records[i];
    try {
      const auto series = simulate(spec, n, derive_seed(seed, detail::kSimulationStream + i));
      const auto decomp = align_signs(eigendecompose(sample_covariance(series)), phi);
      rec.values = decomp.values;
      rec.loadings = decomp.loadings();
      rec.r = detail::cumulative_share(decomp.values);
      if (opts.direct) {
        DirectOptions d;
        d.bandwidth = opts.bandwidth;
        rec.direct = standard_errors(direct_estimate(series, Assumption::ad, d));
      }
      if (opts.bootstrap) {
        MBBConfig cfg = *opts.bootstrap;
        cfg.seed = derive_seed(opts.bootstrap->seed, detail::kBootstrapStream + i);
        rec.bootstrap = bootstrap_sd(series, cfg);
      }
      rec.ok = rec.r.allFinite();
      if (!rec.ok) rec.error = "non-finite proportion of variation";
    } catch (const Error& e) {
      rec.error = e.what();
    }
  });

  std::size_t good = 0;
  std::string first_error;
  Vector sum_v = Vector::Zero(p), sum_r = Vector::Zero(p);
  Matrix sum_a = Matrix::Zero(p, p);
  for (const auto& rec : records) {
    if (!rec.ok) {
      if (first_error.empty()) first_error = rec.error;
      continue;
    }
    ++good;
    sum_v += rec.values, sum_r += rec.r, sum_a += rec.loadings;
  }
  s.failed_replicates = replicates - good;
  s.replicates = good;
  if (static_cast<double>(s.failed_replicates) > opts.max_failure_rate * static_cast<double>(replicates) ||
      good < 2) {
    std::ostringstream msg;
    msg << "run_monte_carlo: " << s.failed_replicates << " of " << replicates
        << " replicates failed (first: " << first_error << ")";
    throw Error(msg.str());
  }
  const double count = static_cast<double>(good);
  s.mean_values = sum_v / count;
  s.mean_r = sum_r / count;
  s.mean_loadings = sum_a / count;

  Matrix cov_v = Matrix::Zero(p, p);
  Vector ss_r = Vector::Zero(p);
  Matrix ss_a = Matrix::Zero(p, p);
  for (const auto& rec : records) {
    if (!rec.ok) continue;
    const Vector dv = rec.values - s.mean_values;
    cov_v += dv * dv.transpose();
    ss_r += (rec.r - s.mean_r).cwiseAbs2();
    ss_a += (rec.loadings - s.mean_loadings).cwiseAbs2();
  }
  const double dn = static_cast<double>(n);
  s.empirical_cov_values = dn * cov_v / (count - 1.0);
  s.empirical_sd_values = (cov_v.diagonal() / (count - 1.0)).cwiseSqrt();
  s.empirical_sd_r = (ss_r / (count - 1.0)).cwiseSqrt();
  s.empirical_sd_loadings = (ss_a / (count - 1.0)).cwiseSqrt();
  if (opts.direct) s.direct = detail::average_sds(records, true);
  if (opts.bootstrap) s.bootstrap = detail::average_sds(records, false);
  return s;
}

/// (sigma_method - sigma_ED) * 100 for k = 1..p-1.
[[nodiscard]] inline Vector delta_r(const Vector& method_sd, const Vector& empirical_sd) {
  if (method_sd.size() != empirical_sd.size()) throw InvalidArgument("delta_r: length mismatch");
  if (method_sd.size() < 2) return Vector(0);
  return 100.0 * (method_sd - empirical_sd).head(method_sd.size() - 1);
}

/// (sigma_method / sigma_ED - 1) * 100. Entries with a zero empirical sd
/// are NaN and should be treated as flagged.
[[nodiscard]] inline Matrix delta_star(const Matrix& method_sd, const Matrix& empirical_sd) {
  if (method_sd.rows() != empirical_sd.rows() || method_sd.cols() != empirical_sd.cols()) {
    throw InvalidArgument("delta_star: shape mismatch");
  }
  Matrix out(method_sd.rows(), method_sd.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const double e = empirical_sd(i, j);
      out(i, j) = e > 0.0 ? 100.0 * (method_sd(i, j) / e - 1.0) : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

/// Row-wise mean of |delta_star|; flagged (NaN) entries are skipped.
[[nodiscard]] inline Vector delta_tilde(const Matrix& delta_star_matrix) {
  Vector out(delta_star_matrix.rows());
  for (Eigen::Index k = 0; k < delta_star_matrix.rows(); ++k) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index j = 0; j < delta_star_matrix.cols(); ++j) {
      const double d = delta_star_matrix(k, j);
      if (std::isnan(d)) continue;
      sum += std::abs(d);
      ++count;
    }
    out(k) = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

struct MethodMetrics {
  Vector delta_r;       // p - 1, percentage points
  Matrix delta_star_a;  // p x p, percent
  Vector delta_tilde;   // p, percent
  std::size_t flagged = 0;
};

/// Comparison metrics of every method against the empirical distribution.
struct MetricTable {
  int dgp_id = 0;
  std::size_t n = 0;
  std::size_t replicates = 0;
  std::map<std::string, MethodMetrics> methods;

  /// Recomputes delta_tilde from delta_star_a; throws on mismatch.
  void check_consistency() const {
    for (const auto& [name, m] : methods) {
      const Vector again = delta_tilde(m.delta_star_a);
      for (Eigen::Index k = 0; k < again.size(); ++k) {
        const double a = again(k), b = m.delta_tilde(k);
        if (!(std::isnan(a) && std::isnan(b)) && a != b) {
          throw Error("metric table for " + name + " is internally inconsistent");
        }
      }
    }
  }
};

[[nodiscard]] inline MethodMetrics compare(const MethodSd& method, const MethodSd& empirical) {
  MethodMetrics m;
  m.delta_r = delta_r(method.r, empirical.r);
  m.delta_star_a = delta_star(method.loadings, empirical.loadings);
  m.delta_tilde = delta_tilde(m.delta_star_a);
  m.flagged = static_cast<std::size_t>(m.delta_star_a.array().isNaN().count());
  return m;
}

/// Standard deviations implied by the population model under `assumption`,
/// evaluated on the model spectrum rotated into the population eigenbasis.
[[nodiscard]] inline MethodSd theoretical_sd(const DGPSpec& spec, const PopulationTruth& truth, Assumption assumption,
                                             std::size_t n, std::size_t grid_size = 4096) {
  SpectralDensityEstimate g;
  if (assumption != Assumption::ind) g = rotate_spectrum(model_spectral_density(spec, grid_size), truth.decomp.vectors);
  EigenAsymptotics asym = asymptotics(assumption, g, truth.decomp);
  asym.scale_n = n;
  const auto se = standard_errors(asym);
  return {se.sd_values, se.sd_loadings, se.sd_r, asym.B};
}

struct PlotPoint {
  std::string series;
  double x = 0.0;
  double y = 0.0;
};

struct ComparisonConfig {
  std::size_t n = 2000;
  std::size_t replicates = 500;        // N
  std::size_t bootstrap_replicates = 500;  // R; 0 disables the bootstrap
  std::size_t block_size = 10;
  std::optional<std::size_t> bandwidth;
  bool direct = true;
  bool theory = true;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t grid_size = 4096;
};

struct ComparisonResult {
  int dgp_id = 0;
  MonteCarloSummary summary;
  std::map<std::string, MethodSd> methods;
  MetricTable table;
  std::vector<PlotPoint> plot;
};

namespace detail {

// Vectorized p x p matrix, column-major, x = 1..p^2.
inline void append_series(std::vector<PlotPoint>& plot, const std::string& name, const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      plot.push_back({name, static_cast<double>(j * m.rows() + i + 1), m(i, j)});
}

}  // namespace detail

/// Runs the Monte-Carlo comparison for one fixture: the empirical
/// distribution, the population AD/DAG/IND standard deviations, and the
/// replicate-averaged direct (DE) and bootstrap (BE) estimates.
[[nodiscard]] inline ComparisonResult run_comparison(int dgp_id, const ComparisonConfig& config) {
  const DGPSpec spec = fixture(dgp_id);
  const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(dgp_id));
  MonteCarloOptions mc;
  mc.threads = config.threads;
  mc.direct = config.direct;
  mc.bandwidth = config.bandwidth;
  if (config.bootstrap_replicates > 0) {
    mc.bootstrap = MBBConfig{config.block_size, config.bootstrap_replicates, derive_seed(seed, detail::kBootstrapStream)};
  }
  ComparisonResult out;
  out.dgp_id = dgp_id;
  out.summary = run_monte_carlo(spec, config.n, config.replicates, seed, mc);
  const MethodSd ed = out.summary.empirical();
  if (config.theory) {
    out.methods["AD"] = theoretical_sd(spec, out.summary.truth, Assumption::ad, config.n, config.grid_size);
    out.methods["DAG"] = theoretical_sd(spec, out.summary.truth, Assumption::dag, config.n, config.grid_size);
    out.methods["IND"] = theoretical_sd(spec, out.summary.truth, Assumption::ind, config.n, config.grid_size);
  }
  if (out.summary.direct) out.methods["DE"] = *out.summary.direct;
  if (out.summary.bootstrap) out.methods["BE"] = *out.summary.bootstrap;

  out.table.dgp_id = dgp_id;
  out.table.n = config.n;
  out.table.replicates = out.summary.replicates;
  for (const auto& [name, sd] : out.methods) out.table.methods[name] = compare(sd, ed);
  out.table.check_consistency();

  detail::append_series(out.plot, "cov_values_ED", ed.cov_values);
  for (const auto& [name, sd] : out.methods) {
    if (sd.cov_values.size() > 0) detail::append_series(out.plot, "cov_values_" + name, sd.cov_values);
  }
  for (const auto& [name, m] : out.table.methods) {
    detail::append_series(out.plot, "delta_star_" + name, m.delta_star_a);
  }
  return out;
}

[[nodiscard]] inline std::vector<ComparisonResult> run_comparison(const std::vector<int>& dgp_ids,
                                                                  const ComparisonConfig& config) {
  std::vector<ComparisonResult> out;
  out.reserve(dgp_ids.size());
  for (int id : dgp_ids) out.push_back(run_comparison(id, config));
  return out;
}

}  // namespace tspca
