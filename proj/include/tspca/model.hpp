#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Eigenvalues>

#include "tspca/error.hpp"
#include "tspca/series.hpp"

namespace tspca {

// Noise laws for the innovation series e(t).

struct GaussianNoise {
  Vector mean;
  Matrix covariance;
};

/// Gaussian noise in which a fraction `outlier_rate` of the draws (at
/// positions chosen without replacement) is replaced by draws from
/// N(outlier_means[j], base.covariance). The outliers are split into
/// consecutive equal chunks, one per listed mean.
struct ContaminatedNoise {
  GaussianNoise base;
  double outlier_rate = 0.01;
  std::vector<Vector> outlier_means;
};

/// Azzalini's multivariate skew normal SN(xi, Omega, alpha).
struct SkewNormalNoise {
  Vector xi;
  Matrix omega;
  Vector alpha;
  /// Subtract the distribution mean so that E e(t) = 0.
  bool recenter = true;
};

/// Multivariate t_v(mu, Sigma); covariance v Sigma / (v - 2).
struct StudentTNoise {
  Vector mu;
  Matrix sigma;
  double dof = 5.0;
};

using NoiseSpec = std::variant<GaussianNoise, ContaminatedNoise, SkewNormalNoise, StudentTNoise>;

enum class ModelKind { var, vma };

/// X(t) = e(t) + sum_j F(j) X(t-j)   (VAR), or
/// X(t) = e(t) + sum_j G(j) e(t-j)   (VMA);
/// coefficients[j-1] holds F(j) or G(j).
struct DGPSpec {
  ModelKind kind = ModelKind::vma;
  std::vector<Matrix> coefficients;
  NoiseSpec noise;
  std::string name;

  [[nodiscard]] std::size_t order() const noexcept { return coefficients.size(); }
  [[nodiscard]] std::size_t p() const;
};

namespace detail {

inline std::size_t noise_dimension(const NoiseSpec& noise) {
  return std::visit(
      [](const auto& n) -> std::size_t {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianNoise>) return static_cast<std::size_t>(n.mean.size());
        if constexpr (std::is_same_v<T, ContaminatedNoise>) return static_cast<std::size_t>(n.base.mean.size());
        if constexpr (std::is_same_v<T, SkewNormalNoise>) return static_cast<std::size_t>(n.xi.size());
        if constexpr (std::is_same_v<T, StudentTNoise>) return static_cast<std::size_t>(n.mu.size());
      },
      noise);
}

struct SkewNormalMoments {
  Vector omega_scale;  // sqrt(diag Omega)
  Vector delta;
  Vector mean;
  Matrix covariance;
};

inline SkewNormalMoments skew_normal_moments(const SkewNormalNoise& sn) {
  SkewNormalMoments m;
  m.omega_scale = sn.omega.diagonal().cwiseSqrt();
  const Vector inv = m.omega_scale.cwiseInverse();
  const Matrix omega_bar = inv.asDiagonal() * sn.omega * inv.asDiagonal();
  const double denom = std::sqrt(1.0 + sn.alpha.dot(omega_bar * sn.alpha));
  m.delta = omega_bar * sn.alpha / denom;
  const Vector mu_z = std::sqrt(2.0 / std::numbers::pi) * m.delta;
  m.mean = sn.xi + m.omega_scale.cwiseProduct(mu_z);
  const Vector shift = m.omega_scale.cwiseProduct(mu_z);
  m.covariance = sn.omega - shift * shift.transpose();
  return m;
}

}  // namespace detail

inline std::size_t DGPSpec::p() const { return detail::noise_dimension(noise); }

/// E e(t) under the noise law (zero for the recentred skew normal).
[[nodiscard]] inline Vector noise_mean(const NoiseSpec& noise) {
  return std::visit(
      [](const auto& n) -> Vector {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianNoise>) {
          return n.mean;
        } else if constexpr (std::is_same_v<T, ContaminatedNoise>) {
          Vector m = (1.0 - n.outlier_rate) * n.base.mean;
          for (const auto& mu : n.outlier_means)
            m += n.outlier_rate / static_cast<double>(n.outlier_means.size()) * mu;
          return m;
        } else if constexpr (std::is_same_v<T, SkewNormalNoise>) {
          if (n.recenter) return Vector::Zero(n.xi.size());
          return detail::skew_normal_moments(n).mean;
        } else {
          return n.mu;
        }
      },
      noise);
}

/// K = Cov e(t) under the noise law.
[[nodiscard]] inline Matrix noise_covariance(const NoiseSpec& noise) {
  return std::visit(
      [&](const auto& n) -> Matrix {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianNoise>) {
          return n.covariance;
        } else if constexpr (std::is_same_v<T, ContaminatedNoise>) {
          const double w = n.outlier_rate / static_cast<double>(n.outlier_means.size());
          Matrix second = n.base.covariance + (1.0 - n.outlier_rate) * n.base.mean * n.base.mean.transpose();
          for (const auto& mu : n.outlier_means) second += w * mu * mu.transpose();
          const Vector m = noise_mean(noise);
          return second - m * m.transpose();
        } else if constexpr (std::is_same_v<T, SkewNormalNoise>) {
          return detail::skew_normal_moments(n).covariance;
        } else {
          if (!(n.dof > 2.0)) throw InvalidArgument("student-t noise needs dof > 2");
          return n.dof / (n.dof - 2.0) * n.sigma;
        }
      },
      noise);
}

/// Companion matrix of a VAR(J); its spectral radius decides stationarity.
[[nodiscard]] inline Matrix companion_matrix(const std::vector<Matrix>& coefficients) {
  const auto order = static_cast<Eigen::Index>(coefficients.size());
  const auto p = coefficients.front().rows();
  Matrix c = Matrix::Zero(p * order, p * order);
  for (Eigen::Index j = 0; j < order; ++j) c.block(0, j * p, p, p) = coefficients[static_cast<std::size_t>(j)];
  if (order > 1) c.block(p, 0, p * (order - 1), p * (order - 1)).setIdentity();
  return c;
}

[[nodiscard]] inline double spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Checks shapes and, for VAR models, stationarity.
inline void validate(const DGPSpec& spec) {
  const auto p = static_cast<Eigen::Index>(spec.p());
  if (p < 1) throw InvalidArgument("model dimension must be positive");
  for (const auto& c : spec.coefficients) {
    if (c.rows() != p || c.cols() != p) throw InvalidArgument("coefficient matrix shape mismatch");
    if (!c.allFinite()) throw InvalidArgument("non-finite model coefficient");
  }
  if (spec.kind == ModelKind::var && !spec.coefficients.empty()) {
    const double rho = spectral_radius(companion_matrix(spec.coefficients));
    if (!(rho < 1.0)) {
      throw NonStationaryModel("VAR companion spectral radius " + std::to_string(rho) + " >= 1");
    }
  }
}

/// h(w): I + sum G(j) e^{-ijw} for VMA, (I - sum F(j) e^{-ijw})^{-1} for VAR.
[[nodiscard]] inline ComplexMatrix transfer_function(const DGPSpec& spec, double omega) {
  const auto p = static_cast<Eigen::Index>(spec.p());
  ComplexMatrix poly = ComplexMatrix::Identity(p, p);
  const double sign = spec.kind == ModelKind::vma ? 1.0 : -1.0;
  for (std::size_t j = 0; j < spec.coefficients.size(); ++j) {
    const std::complex<double> phase = std::polar(1.0, -static_cast<double>(j + 1) * omega);
    poly += sign * phase * spec.coefficients[j].cast<std::complex<double>>();
  }
  if (spec.kind == ModelKind::vma) return poly;
  return poly.inverse();
}

}  // namespace tspca
