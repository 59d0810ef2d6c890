#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "tspca/error.hpp"
#include "tspca/model.hpp"
#include "tspca/series.hpp"

namespace tspca {

enum class SpectrumKind { raw, smoothed, rotated, model };

/// Hermitian p x p spectral matrices on a uniform frequency grid in [-pi, pi].
///
/// Periodogram grids are the Fourier frequencies 2 pi j / n for
/// j = -floor(n/2)..floor(n/2); for even n both -pi and pi are present and
/// carry the same matrix. Model grids are -pi + 2 pi j / G for j = 0..G.
struct SpectralDensityEstimate {
  std::vector<double> frequencies;
  std::vector<ComplexMatrix> matrices;
  SpectrumKind kind = SpectrumKind::raw;

  [[nodiscard]] std::size_t size() const noexcept { return frequencies.size(); }
  [[nodiscard]] std::size_t p() const noexcept {
    return matrices.empty() ? 0 : static_cast<std::size_t>(matrices.front().rows());
  }
};

struct TransferEvaluation {
  double frequency = 0.0;
  ComplexMatrix h;
};

[[nodiscard]] inline std::vector<double> fourier_grid(std::size_t n) {
  const auto half = static_cast<long>(n / 2);
  std::vector<double> grid;
  grid.reserve(2 * static_cast<std::size_t>(half) + 1);
  for (long j = -half; j <= half; ++j)
    grid.push_back(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
  return grid;
}

namespace detail {

inline constexpr double kGridTolerance = 1e-9;

inline bool closes_period(const std::vector<double>& freqs) {
  return std::abs(freqs.front() + std::numbers::pi) < kGridTolerance &&
         std::abs(freqs.back() - std::numbers::pi) < kGridTolerance;
}

// Number of distinct ordinates in one period of a validated grid.
inline std::size_t period_length(const std::vector<double>& freqs) {
  return closes_period(freqs) ? freqs.size() - 1 : freqs.size();
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

}  // namespace detail

/// Trapezoid weights for a periodic integrand on a uniform grid.
///
/// Accepts either a grid whose ends are -pi and pi (endpoints weighted h/2)
/// or a grid of n points spanning exactly one period with spacing 2 pi / n
/// (all weights h), which is the odd-n Fourier grid.
[[nodiscard]] inline std::vector<double> quadrature_weights(const std::vector<double>& freqs) {
  if (freqs.size() < 2) throw InvalidArgument("frequency grid needs at least 2 points");
  const double h = freqs[1] - freqs[0];
  if (!(h > 0.0)) throw InvalidArgument("frequency grid must be increasing");
  for (std::size_t j = 1; j < freqs.size(); ++j) {
    if (std::abs((freqs[j] - freqs[j - 1]) - h) > detail::kGridTolerance) {
      throw InvalidArgument("frequency grid is not uniform");
    }
  }
  std::vector<double> w(freqs.size(), h);
  if (detail::closes_period(freqs)) {
    w.front() = w.back() = 0.5 * h;
    return w;
  }
  const double span = h * static_cast<double>(freqs.size());
  if (std::abs(span - 2.0 * std::numbers::pi) > 1e-7 || freqs.front() < -std::numbers::pi - 1e-9 ||
      freqs.back() > std::numbers::pi + 1e-9) {
    throw InvalidArgument("frequency grid does not cover [-pi, pi]");
  }
  return w;
}

/// Trapezoidal integral over [-pi, pi] of per-frequency values of any type
/// closed under addition and scalar multiplication.
template <class T>
[[nodiscard]] T integrate_over_frequency(const std::vector<double>& freqs, const std::vector<T>& values) {
  if (values.size() != freqs.size()) throw InvalidArgument("integrand and grid sizes differ");
  const auto w = quadrature_weights(freqs);
  T acc = values.front() * w.front();
  for (std::size_t j = 1; j < values.size(); ++j) acc += values[j] * w[j];
  return acc;
}

/// Real part of the integral of a Hermitian spectral matrix; the imaginary
/// part cancels by conjugate symmetry and is dropped.
[[nodiscard]] inline Matrix integrate_over_frequency(const SpectralDensityEstimate& f) {
  return integrate_over_frequency(f.frequencies, f.matrices).real();
}

namespace detail {

// Full-lag periodogram through the DFT identity f~(w_j) = d(w_j) d(w_j)^H / (2 pi n).
inline SpectralDensityEstimate periodogram_by_dft(const MultivariateSeries& series) {
  const std::size_t n = series.n();
  const auto p = static_cast<Eigen::Index>(series.p());
  const Matrix y = centered(series);
  Eigen::FFT<double> fft;
  std::vector<std::vector<std::complex<double>>> dft(static_cast<std::size_t>(p));
  std::vector<double> column(n);
  for (Eigen::Index c = 0; c < p; ++c) {
    for (std::size_t t = 0; t < n; ++t) column[t] = y(static_cast<Eigen::Index>(t), c);
    fft.fwd(dft[static_cast<std::size_t>(c)], column);
  }
  SpectralDensityEstimate out;
  out.kind = SpectrumKind::raw;
  out.frequencies = fourier_grid(n);
  out.matrices.reserve(out.frequencies.size());
  const double norm = 1.0 / (2.0 * std::numbers::pi * static_cast<double>(n));
  const auto half = static_cast<long>(n / 2);
  Eigen::VectorXcd d(p);
  for (long j = -half; j <= half; ++j) {
    const auto k = static_cast<std::size_t>((j % static_cast<long>(n) + static_cast<long>(n)) %
                                            static_cast<long>(n));
    for (Eigen::Index c = 0; c < p; ++c) d(c) = dft[static_cast<std::size_t>(c)][k];
    out.matrices.push_back(hermitian_part(norm * d * d.adjoint()));
  }
  return out;
}

// Lag-window form (2 pi)^{-1} [G(0) + sum_{s=1}^{L} (G(s) e^{-isw} + G(s)^T e^{isw})].
inline SpectralDensityEstimate periodogram_by_lags(const MultivariateSeries& series, std::size_t max_lag) {
  const auto acov = autocovariance_sequence(series, max_lag);
  SpectralDensityEstimate out;
  out.kind = SpectrumKind::raw;
  out.frequencies = fourier_grid(series.n());
  out.matrices.reserve(out.frequencies.size());
  for (double w : out.frequencies) {
    ComplexMatrix acc = acov.matrices[0].cast<std::complex<double>>();
    for (std::size_t s = 1; s <= max_lag; ++s) {
      const std::complex<double> e = std::polar(1.0, -static_cast<double>(s) * w);
      acc += e * acov.matrices[s].cast<std::complex<double>>() +
             std::conj(e) * acov.matrices[s].transpose().cast<std::complex<double>>();
    }
    out.matrices.push_back(hermitian_part(acc / (2.0 * std::numbers::pi)));
  }
  return out;
}

}  // namespace detail

/// Raw periodogram on the Fourier grid. Lags beyond max_lag are dropped;
/// the default (n - 1) is the full sum, evaluated through the DFT.
[[nodiscard]] inline SpectralDensityEstimate raw_periodogram(const MultivariateSeries& series,
                                                             std::optional<std::size_t> max_lag = {}) {
  const std::size_t full = series.n() - 1;
  const std::size_t lag = max_lag.value_or(full);
  if (lag < 1 || lag > full) {
    throw InvalidArgument("max_lag must lie in [1, n-1] = [1, " + std::to_string(full) + "], got " +
                          std::to_string(lag));
  }
  if (lag == full) return detail::periodogram_by_dft(series);
  return detail::periodogram_by_lags(series, lag);
}

/// Largest bandwidth accepted for a grid with `ordinates` distinct Fourier
/// frequencies: each ordinate enters a window at most once.
[[nodiscard]] constexpr std::size_t max_bandwidth(std::size_t ordinates) noexcept {
  return ordinates == 0 ? 0 : (ordinates - 1) / 2;
}

/// ceil(n^{1/3}).
[[nodiscard]] inline std::size_t default_bandwidth(std::size_t n) {
  auto m = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n)) - 1e-12));
  return std::max<std::size_t>(1, m);
}

/// Daniell smoothing: every ordinate becomes the flat average of its 2M+1
/// neighbours on the Fourier grid, wrapping around at +/- pi.
[[nodiscard]] inline SpectralDensityEstimate daniell_smooth(const SpectralDensityEstimate& raw, std::size_t bandwidth) {
  static_cast<void>(quadrature_weights(raw.frequencies));  // rejects non-uniform grids
  const std::size_t period = detail::period_length(raw.frequencies);
  if (bandwidth < 1 || bandwidth > max_bandwidth(period)) {
    throw InvalidArgument("bandwidth M must lie in [1, " + std::to_string(max_bandwidth(period)) +
                          "], got " + std::to_string(bandwidth));
  }
  const auto p = static_cast<Eigen::Index>(raw.p());
  const double weight = 1.0 / static_cast<double>(2 * bandwidth + 1);
  const auto wrap = [period](long i) {
    const auto n = static_cast<long>(period);
    return static_cast<std::size_t>(((i % n) + n) % n);
  };

  SpectralDensityEstimate out;
  out.kind = SpectrumKind::smoothed;
  out.frequencies = raw.frequencies;
  out.matrices.resize(raw.size());
  // Running window sum, refreshed from scratch periodically to bound drift.
  ComplexMatrix window = ComplexMatrix::Zero(p, p);
  const auto m = static_cast<long>(bandwidth);
  for (std::size_t i = 0; i < period; ++i) {
    if (i % 256 == 0) {
      window.setZero();
      for (long k = -m; k <= m; ++k) window += raw.matrices[wrap(static_cast<long>(i) + k)];
    } else {
      window += raw.matrices[wrap(static_cast<long>(i) + m)];
      window -= raw.matrices[wrap(static_cast<long>(i) - m - 1)];
    }
    out.matrices[i] = detail::hermitian_part(weight * window);
  }
  if (period < raw.size()) out.matrices.back() = out.matrices.front();
  return out;
}

/// g(w) = B^T f(w) B for an orthonormal basis B (checked to 1e-6).
[[nodiscard]] inline SpectralDensityEstimate rotate_spectrum(const SpectralDensityEstimate& f, const Matrix& basis) {
  const auto p = static_cast<Eigen::Index>(f.p());
  if (basis.rows() != p || basis.cols() != p) throw InvalidArgument("rotate_spectrum: basis shape mismatch");
  const double err = (basis.transpose() * basis - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
  if (err > 1e-6) throw InvalidArgument("rotate_spectrum: basis is not orthonormal");
  const ComplexMatrix b = basis.cast<std::complex<double>>();
  SpectralDensityEstimate out;
  out.kind = SpectrumKind::rotated;
  out.frequencies = f.frequencies;
  out.matrices.reserve(f.size());
  for (const auto& m : f.matrices) out.matrices.push_back(detail::hermitian_part(b.transpose() * m * b));
  return out;
}

[[nodiscard]] inline std::vector<TransferEvaluation> transfer_on_grid(const DGPSpec& spec,
                                                                      const std::vector<double>& grid) {
  std::vector<TransferEvaluation> out;
  out.reserve(grid.size());
  for (double w : grid) out.push_back({w, transfer_function(spec, w)});
  return out;
}

/// Model-implied spectrum f(w) = h(w) K h(w)^H / (2 pi) on -pi + 2 pi j / G, j = 0..G.
[[nodiscard]] inline SpectralDensityEstimate model_spectral_density(const DGPSpec& spec, std::size_t grid_size = 4096) {
  validate(spec);
  if (grid_size < 2) throw InvalidArgument("grid_size must be at least 2");
  const ComplexMatrix k = noise_covariance(spec.noise).cast<std::complex<double>>();
  SpectralDensityEstimate out;
  out.kind = SpectrumKind::model;
  out.frequencies.reserve(grid_size + 1);
  out.matrices.reserve(grid_size + 1);
  for (std::size_t j = 0; j <= grid_size; ++j) {
    const double w = j == grid_size ? std::numbers::pi
                                    : -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(j) /
                                                               static_cast<double>(grid_size);
    const ComplexMatrix h = transfer_function(spec, w);
    out.frequencies.push_back(w);
    out.matrices.push_back(detail::hermitian_part(h * k * h.adjoint() / (2.0 * std::numbers::pi)));
  }
  return out;
}

}  // namespace tspca
