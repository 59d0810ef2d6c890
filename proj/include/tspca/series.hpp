#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tspca/error.hpp"

namespace tspca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// n x p panel of observations; row t is the observation at time t.
///
/// Construction enforces n >= 2, p >= 1 and finite entries, so every
/// downstream estimator can assume a complete panel.
class MultivariateSeries {
 public:
  explicit MultivariateSeries(Matrix data) : data_(std::move(data)) {
    if (data_.rows() < 2) {
      throw InvalidInput("series needs at least 2 observations, got " +
                         std::to_string(data_.rows()));
    }
    if (data_.cols() < 1) throw InvalidInput("series needs at least 1 variable");
    for (Eigen::Index j = 0; j < data_.cols(); ++j) {
      for (Eigen::Index t = 0; t < data_.rows(); ++t) {
        if (!std::isfinite(data_(t, j))) {
          throw InvalidInput("non-finite value at row " + std::to_string(t + 1) +
                             ", column " + std::to_string(j + 1));
        }
      }
    }
  }

  [[nodiscard]] const Matrix& data() const noexcept { return data_; }
  [[nodiscard]] std::size_t n() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  [[nodiscard]] std::size_t p() const noexcept { return static_cast<std::size_t>(data_.cols()); }

 private:
  Matrix data_;
};

/// Lagged autocovariances Gamma_hat(s) for s = 0..max_lag.
struct AutocovarianceSequence {
  std::vector<std::size_t> lags;
  std::vector<Matrix> matrices;
};

[[nodiscard]] inline Vector sample_mean(const MultivariateSeries& series) {
  return series.data().colwise().mean().transpose();
}

namespace detail {

inline Matrix centered(const MultivariateSeries& series) {
  return series.data().rowwise() - series.data().colwise().mean();
}

// (1/n) sum_{t=1}^{n-s} Y(t+s) Y(t)^T on an already centered panel.
inline Matrix lagged_cross_product(const Matrix& y, std::size_t lag) {
  const auto n = y.rows();
  const auto m = n - static_cast<Eigen::Index>(lag);
  Matrix out = y.bottomRows(m).transpose() * y.topRows(m);
  out /= static_cast<double>(n);
  if (lag == 0) out = 0.5 * (out + out.transpose()).eval();
  return out;
}

}  // namespace detail

/// Biased lag-s autocovariance: the sum runs over the n - s available pairs
/// and the divisor stays n, which keeps the sequence positive semi-definite.
[[nodiscard]] inline Matrix sample_autocovariance(const MultivariateSeries& series,
                                                  std::size_t lag) {
  if (lag > series.n() - 1) {
    throw InvalidArgument("lag " + std::to_string(lag) + " exceeds n-1 = " +
                          std::to_string(series.n() - 1));
  }
  return detail::lagged_cross_product(detail::centered(series), lag);
}

/// C_n with divisor n. Identical to sample_autocovariance(series, 0).
[[nodiscard]] inline Matrix sample_covariance(const MultivariateSeries& series) {
  return sample_autocovariance(series, 0);
}

[[nodiscard]] inline AutocovarianceSequence autocovariance_sequence(
    const MultivariateSeries& series, std::size_t max_lag) {
  if (max_lag > series.n() - 1) {
    throw InvalidArgument("max_lag " + std::to_string(max_lag) + " exceeds n-1 = " +
                          std::to_string(series.n() - 1));
  }
  const Matrix y = detail::centered(series);
  AutocovarianceSequence seq;
  seq.lags.reserve(max_lag + 1);
  seq.matrices.reserve(max_lag + 1);
  for (std::size_t s = 0; s <= max_lag; ++s) {
    seq.lags.push_back(s);
    seq.matrices.push_back(detail::lagged_cross_product(y, s));
  }
  return seq;
}

}  // namespace tspca
