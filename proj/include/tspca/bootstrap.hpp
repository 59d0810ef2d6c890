#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tspca/eigensystem.hpp"
#include "tspca/error.hpp"
#include "tspca/parallel.hpp"
#include "tspca/rng.hpp"
#include "tspca/series.hpp"

namespace tspca {

/// Moving block bootstrap settings. Each replicate concatenates
/// ceil(n / block_size) blocks and is cut back to length n.
struct MBBConfig {
  std::size_t block_size = 10;
  std::size_t replicates = 500;
  std::uint64_t seed = 0;
};

struct BootstrapResult {
  Vector sd_values;    // eigenvalues
  Matrix sd_loadings;  // component-by-variable, aligned loadings
  Vector sd_r;         // sd_r[p-1] = 0
  std::size_t replicate_count = 0;
  std::size_t failed_replicates = 0;
  EigenDecomposition point;  // alignment reference
};

struct BootstrapOptions {
  std::size_t threads = 1;
  /// Test hook: when false, replicate eigenvectors keep their canonical signs.
  bool align = true;
  double max_failure_rate = 0.01;
  double degeneracy_tolerance = 1e-8;
};

/// ceil(n^{1/3}).
[[nodiscard]] inline std::size_t default_block_size(std::size_t n) {
  auto b = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n)) - 1e-12));
  return std::max<std::size_t>(1, b);
}

[[nodiscard]] constexpr std::size_t block_count(std::size_t n, std::size_t block_size) noexcept {
  return (n + block_size - 1) / block_size;
}

namespace detail {

inline void check_block_size(std::size_t block_size, std::size_t n) {
  if (block_size < 1 || block_size > n) {
    throw InvalidArgument("block size must lie in [1, n] = [1, " + std::to_string(n) + "], got " +
                          std::to_string(block_size));
  }
}

inline void check_config(const MBBConfig& config, std::size_t n) {
  check_block_size(config.block_size, n);
  if (config.replicates < 2) throw InvalidArgument("bootstrap needs at least 2 replicates");
}

// Block start rows (0-based) for one replicate.
inline std::vector<std::size_t> block_starts(std::size_t n, const MBBConfig& config, std::uint64_t replicate) {
  auto engine = make_engine(config.seed, replicate);
  std::uniform_int_distribution<std::size_t> pick(0, n - config.block_size);
  std::vector<std::size_t> starts(block_count(n, config.block_size));
  for (auto& s : starts) s = pick(engine);
  return starts;
}

}  // namespace detail

/// One naive (j = 1) moving block bootstrap replicate. Block starts are
/// drawn uniformly with replacement among the n - block_size + 1 fully
/// contained blocks from a stream keyed by (config.seed, replicate_index).
[[nodiscard]] inline MultivariateSeries mbb_resample(const MultivariateSeries& series, const MBBConfig& config,
                                                     std::uint64_t replicate_index) {
  const std::size_t n = series.n();
  detail::check_block_size(config.block_size, n);
  const auto starts = detail::block_starts(n, config, replicate_index);
  Matrix out(series.data().rows(), series.data().cols());
  const auto b = static_cast<Eigen::Index>(config.block_size);
  Eigen::Index row = 0;
  for (std::size_t start : starts) {
    const Eigen::Index take = std::min<Eigen::Index>(b, out.rows() - row);
    out.middleRows(row, take) = series.data().middleRows(static_cast<Eigen::Index>(start), take);
    row += take;
  }
  return MultivariateSeries(std::move(out));
}

/// Moving block bootstrap standard deviations of eigenvalues, sign-aligned
/// loadings and proportions of variation (divisor R - 1). Replicates are
/// independent streams; the reduction runs in replicate order, so results do
/// not depend on the thread count.
[[nodiscard]] inline BootstrapResult bootstrap_sd(const MultivariateSeries& series, const MBBConfig& config,
                                                  const BootstrapOptions& opts = {}) {
  detail::check_config(config, series.n());
  const auto p = static_cast<Eigen::Index>(series.p());
  BootstrapResult result;
  result.point = eigendecompose(sample_covariance(series));
  require_distinct_eigenvalues(result.point.values, opts.degeneracy_tolerance);

  struct Replicate {
    bool ok = false;
    Vector values;
    Matrix loadings;
    Vector r;
    std::string error;
  };
  std::vector<Replicate> reps(config.replicates);
  parallel_for(config.replicates, opts.threads, [&](std::size_t i) {
    Replicate& rep = reps[i];
    try {
      const auto resampled = mbb_resample(series, config, i);
      auto decomp = eigendecompose(sample_covariance(resampled));
      if (opts.align) decomp = align_signs(std::move(decomp), result.point.vectors);
      rep.values = decomp.values;
      rep.loadings = decomp.vectors.transpose();
      rep.r = detail::cumulative_share(decomp.values);
      rep.ok = rep.r.allFinite();
      if (!rep.ok) rep.error = "non-finite proportion of variation";
    } catch (const Error& e) {
      rep.error = e.what();
    }
  });

  // Deviations are taken from the first successful replicate, so identical
  // replicates give exactly zero spread.
  const Replicate* anchor = nullptr;
  std::size_t good = 0;
  std::string first_error;
  Vector sum_v = Vector::Zero(p), sum_r = Vector::Zero(p);
  Matrix sum_a = Matrix::Zero(p, p);
  for (const auto& rep : reps) {
    if (!rep.ok) {
      if (first_error.empty()) first_error = rep.error;
      continue;
    }
    if (!anchor) anchor = &rep;
    ++good;
    sum_v += rep.values - anchor->values;
    sum_r += rep.r - anchor->r;
    sum_a += rep.loadings - anchor->loadings;
  }
  result.failed_replicates = config.replicates - good;
  if (static_cast<double>(result.failed_replicates) >
          opts.max_failure_rate * static_cast<double>(config.replicates) ||
      good < 2) {
    std::ostringstream msg;
    msg << "bootstrap: " << result.failed_replicates << " of " << config.replicates
        << " replicates failed (first: " << first_error << ")";
    throw Error(msg.str());
  }
  const double count = static_cast<double>(good);
  const Vector mean_v = sum_v / count, mean_r = sum_r / count;
  const Matrix mean_a = sum_a / count;
  Vector ss_v = Vector::Zero(p), ss_r = Vector::Zero(p);
  Matrix ss_a = Matrix::Zero(p, p);
  for (const auto& rep : reps) {
    if (!rep.ok) continue;
    ss_v += (rep.values - anchor->values - mean_v).cwiseAbs2();
    ss_r += (rep.r - anchor->r - mean_r).cwiseAbs2();
    ss_a += (rep.loadings - anchor->loadings - mean_a).cwiseAbs2();
  }
  result.sd_values = (ss_v / (count - 1.0)).cwiseSqrt();
  result.sd_r = (ss_r / (count - 1.0)).cwiseSqrt();
  result.sd_r(p - 1) = 0.0;
  result.sd_loadings = (ss_a / (count - 1.0)).cwiseSqrt();
  result.replicate_count = good;
  return result;
}

}  // namespace tspca
