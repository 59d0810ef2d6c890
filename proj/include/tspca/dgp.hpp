#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "tspca/eigensystem.hpp"
#include "tspca/error.hpp"
#include "tspca/model.hpp"
#include "tspca/rng.hpp"
#include "tspca/series.hpp"

namespace tspca {

inline constexpr std::size_t kVarBurnIn = 500;
inline constexpr int kFixtureCount = 8;
/// Bumped whenever a fixture constant changes.
inline constexpr int kFixtureVersion = 1;

namespace fixtures {

using Rows5 = std::array<std::array<double, 5>, 5>;

inline constexpr Rows5 kDgp1F1{{
    {0.21, -0.49, 0.16, -0.14, -0.36},
    {-0.25, 0.074, 0.38, -0.14, 0.047},
    {-0.11, 0.26, 0.39, 0.091, 0.18},
    {-0.41, 0.37, 0.066, 0.37, 0.028},
    {0.46, -0.46, 0.094, 0.18, -0.41},
}};

// Shared by DGPs 2 and 5-8.
inline constexpr Rows5 kVma1G1{{
    {-0.46, 0.17, 0.23, 0.40, -0.22},
    {0.15, -0.59, 0.05, -0.26, -0.24},
    {0.13, -0.32, -0.26, -0.28, -0.41},
    {0.15, 0.20, 0.51, -0.38, -0.55},
    {0.43, 0.02, -0.25, -0.32, -0.34},
}};

inline constexpr Rows5 kDgp3G1{{
    {0.62, -0.73, -0.02, 0.52, -0.52},
    {0.71, -0.11, -0.19, 0.43, -0.75},
    {0.09, -0.56, 0.79, -0.51, -0.08},
    {0.14, 0.90, 0.07, -0.53, -0.27},
    {-0.23, -0.01, 0.59, 0.81, 0.10},
}};

inline constexpr Rows5 kDgp3G2{{
    {0.26, -0.16, -0.16, -0.38, 0.27},
    {0.34, -0.27, -0.33, -0.44, 0.06},
    {-0.22, -0.18, 0.62, -0.08, 0.19},
    {0.26, -0.30, 0.15, -0.24, 0.02},
    {0.11, 0.21, 0.21, -0.14, 0.45},
}};

inline constexpr Rows5 kDgp4G1{{
    {0.94, -0.35, -0.49, 0.17, -0.18},
    {0.58, 0.35, -0.43, -0.29, -0.36},
    {0.42, -0.16, 1.07, -0.28, 0.39},
    {0.59, 0.41, -0.38, 0.27, -0.03},
    {0.18, 0.66, -0.28, 0.42, 0.91},
}};

inline constexpr Rows5 kDgp4G2{{
    {-0.14, -0.04, -0.33, 0.40, 0.02},
    {0.27, -0.32, -0.27, 0.02, -0.16},
    {0.45, -0.18, 0.03, -0.31, 0.16},
    {0.41, 0.39, -0.33, -0.36, 0.10},
    {0.31, 0.47, -0.08, 0.14, -0.26},
}};

inline constexpr Rows5 kDgp4G3{{
    {-0.16, 0.24, 0.10, 0.22, 0.17},
    {-0.22, 0.17, 0.10, 0.26, 0.14},
    {0.06, -0.03, -0.11, -0.05, -0.17},
    {-0.11, 0.02, 0.01, 0.19, 0.11},
    {0.14, -0.11, 0.16, -0.21, -0.24},
}};

inline Matrix to_matrix(const Rows5& rows) {
  Matrix m(5, 5);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline GaussianNoise gaussian_10i() { return {Vector::Zero(5), 10.0 * Matrix::Identity(5, 5)}; }

}  // namespace fixtures

/// The eight simulation models: DGP 1 VAR(1); DGP 2 VMA(1); DGP 3 VMA(2);
/// DGP 4 VMA(3), all with N(0, 10 I) noise; DGPs 5-8 share DGP 2's G(1)
/// with contaminated, skew-normal, t(5) and t(8) noise.
[[nodiscard]] inline DGPSpec fixture(int dgp_id) {
  using namespace fixtures;
  DGPSpec spec;
  spec.name = "DGP" + std::to_string(dgp_id);
  spec.noise = gaussian_10i();
  switch (dgp_id) {
    case 1:
      spec.kind = ModelKind::var;
      spec.coefficients = {to_matrix(kDgp1F1)};
      break;
    case 2:
      spec.coefficients = {to_matrix(kVma1G1)};
      break;
    case 3:
      spec.coefficients = {to_matrix(kDgp3G1), to_matrix(kDgp3G2)};
      break;
    case 4:
      spec.coefficients = {to_matrix(kDgp4G1), to_matrix(kDgp4G2), to_matrix(kDgp4G3)};
      break;
    case 5:
      spec.coefficients = {to_matrix(kVma1G1)};
      spec.noise = ContaminatedNoise{gaussian_10i(), 0.01, {Vector::Constant(5, 10.0), Vector::Constant(5, -10.0)}};
      break;
    case 6: {
      Vector alpha(5);
      alpha << 1, 2, 3, 4, 5;
      spec.coefficients = {to_matrix(kVma1G1)};
      spec.noise = SkewNormalNoise{Vector::Zero(5), 10.0 * Matrix::Identity(5, 5), alpha, true};
      break;
    }
    case 7:
    case 8:
      spec.coefficients = {to_matrix(kVma1G1)};
      spec.noise = StudentTNoise{Vector::Zero(5), 10.0 * Matrix::Identity(5, 5), dgp_id == 7 ? 5.0 : 8.0};
      break;
    default:
      throw InvalidArgument("DGP id must lie in 1..8, got " + std::to_string(dgp_id));
  }
  return spec;
}

/// FNV-1a over a canonical text rendering of the model (kind, coefficients
/// at 17 significant digits, noise law). Stable across platforms.
[[nodiscard]] inline std::uint64_t spec_checksum(const DGPSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  auto feed_number = [&](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g;", x);
    feed(buf);
  };
  auto feed_matrix = [&](const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) feed_number(m(i, j));
    feed("|");
  };
  feed(spec.kind == ModelKind::var ? "VAR" : "VMA");
  for (const auto& c : spec.coefficients) feed_matrix(c);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianNoise>) {
          feed("gaussian");
          feed_matrix(n.mean);
          feed_matrix(n.covariance);
        } else if constexpr (std::is_same_v<T, ContaminatedNoise>) {
          feed("contaminated");
          feed_matrix(n.base.mean);
          feed_matrix(n.base.covariance);
          feed_number(n.outlier_rate);
          for (const auto& mu : n.outlier_means) feed_matrix(mu);
        } else if constexpr (std::is_same_v<T, SkewNormalNoise>) {
          feed("skew_normal");
          feed_matrix(n.xi);
          feed_matrix(n.omega);
          feed_matrix(n.alpha);
          feed(n.recenter ? "centered" : "raw");
        } else {
          feed("student_t");
          feed_matrix(n.mu);
          feed_matrix(n.sigma);
          feed_number(n.dof);
        }
      },
      spec.noise);
  return h;
}

namespace detail {

// Symmetric square root of a PSD matrix; rejects eigenvalues below -1e-10 * trace.
inline Matrix psd_sqrt(const Matrix& m) {
  const auto decomp = eigendecompose(m);
  const double tol = 1e-10 * std::max(std::abs(m.trace()), 1e-300);
  if (decomp.values.minCoeff() < -tol) throw InvalidArgument("scale matrix is not positive semi-definite");
  const Vector root = decomp.values.cwiseMax(0.0).cwiseSqrt();
  return decomp.vectors * root.asDiagonal() * decomp.vectors.transpose();
}

inline Matrix standard_normals(Engine& engine, std::size_t count, Eigen::Index p) {
  std::normal_distribution<double> z;
  Matrix out(static_cast<Eigen::Index>(count), p);
  for (Eigen::Index t = 0; t < out.rows(); ++t)
    for (Eigen::Index j = 0; j < p; ++j) out(t, j) = z(engine);
  return out;
}

inline Matrix gaussian_rows(Engine& engine, std::size_t count, const Vector& mean, const Matrix& covariance) {
  const Matrix root = psd_sqrt(covariance);
  Matrix out = standard_normals(engine, count, mean.size()) * root;
  out.rowwise() += mean.transpose();
  return out;
}

}  // namespace detail

/// `count` i.i.d. draws (rows) from the noise law, reproducible per seed.
[[nodiscard]] inline Matrix draw_noise(const NoiseSpec& noise, std::size_t count, std::uint64_t seed) {
  auto engine = make_engine(seed, 0x6e6f697365ULL);
  return std::visit(
      [&](const auto& n) -> Matrix {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianNoise>) {
          return detail::gaussian_rows(engine, count, n.mean, n.covariance);
        } else if constexpr (std::is_same_v<T, ContaminatedNoise>) {
          Matrix out = detail::gaussian_rows(engine, count, n.base.mean, n.base.covariance);
          if (n.outlier_means.empty()) return out;
          const auto outliers = std::min<std::size_t>(
              count, static_cast<std::size_t>(std::llround(n.outlier_rate * static_cast<double>(count))));
          std::vector<std::size_t> rows(count);
          std::iota(rows.begin(), rows.end(), std::size_t{0});
          // Partial Fisher-Yates: the first `outliers` entries are a uniform sample without replacement.
          for (std::size_t i = 0; i < outliers; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, count - 1);
            std::swap(rows[i], rows[pick(engine)]);
          }
          const Matrix root = detail::psd_sqrt(n.base.covariance);
          const std::size_t groups = n.outlier_means.size();
          for (std::size_t i = 0; i < outliers; ++i) {
            const std::size_t g = i * groups / outliers;
            const Vector z = detail::standard_normals(engine, 1, root.rows()).row(0).transpose();
            out.row(static_cast<Eigen::Index>(rows[i])) = (n.outlier_means[g] + root * z).transpose();
          }
          return out;
        } else if constexpr (std::is_same_v<T, SkewNormalNoise>) {
          // Hidden truncation: (Z0, Z) jointly normal with corr(Z0, Z) = delta;
          // Z is reflected whenever Z0 < 0.
          const auto m = detail::skew_normal_moments(n);
          const auto p = n.xi.size();
          const Vector inv = m.omega_scale.cwiseInverse();
          const Matrix omega_bar = inv.asDiagonal() * n.omega * inv.asDiagonal();
          Matrix joint(p + 1, p + 1);
          joint(0, 0) = 1.0;
          joint.block(1, 0, p, 1) = m.delta;
          joint.block(0, 1, 1, p) = m.delta.transpose();
          joint.block(1, 1, p, p) = omega_bar;
          const Matrix root = detail::psd_sqrt(joint);
          const Matrix draws = detail::standard_normals(engine, count, p + 1) * root;
          const Vector offset = n.recenter ? Vector(n.xi - m.mean) : n.xi;
          Matrix out(static_cast<Eigen::Index>(count), p);
          for (Eigen::Index t = 0; t < out.rows(); ++t) {
            const double flip = draws(t, 0) < 0.0 ? -1.0 : 1.0;
            out.row(t) = (flip * draws.row(t).tail(p)).cwiseProduct(m.omega_scale.transpose());
            out.row(t) += offset.transpose();
          }
          return out;
        } else {
          if (!(n.dof > 2.0)) throw InvalidArgument("student-t noise needs dof > 2");
          Matrix out = detail::gaussian_rows(engine, count, Vector::Zero(n.mu.size()), n.sigma);
          std::chi_squared_distribution<double> chi2(n.dof);
          for (Eigen::Index t = 0; t < out.rows(); ++t) {
            out.row(t) *= std::sqrt(n.dof / chi2(engine));
            out.row(t) += n.mu.transpose();
          }
          return out;
        }
      },
      noise);
}

/// A path of length n. VMA paths are exact (J pre-sample innovations); VAR
/// paths start from zero and discard kVarBurnIn steps.
[[nodiscard]] inline MultivariateSeries simulate(const DGPSpec& spec, std::size_t n, std::uint64_t seed) {
  validate(spec);
  if (n < 2) throw InvalidArgument("simulate: n must be at least 2");
  const auto p = static_cast<Eigen::Index>(spec.p());
  const std::size_t order = spec.order();
  const auto rows = static_cast<Eigen::Index>(n);
  Matrix x(rows, p);
  if (spec.kind == ModelKind::vma) {
    const Matrix e = draw_noise(spec.noise, n + order, seed);
    const auto j0 = static_cast<Eigen::Index>(order);
    x = e.bottomRows(rows);
    for (std::size_t j = 1; j <= order; ++j) {
      x.noalias() += e.middleRows(j0 - static_cast<Eigen::Index>(j), rows) * spec.coefficients[j - 1].transpose();
    }
  } else {
    const std::size_t total = n + kVarBurnIn;
    const Matrix e = draw_noise(spec.noise, total, seed);
    Matrix path = Matrix::Zero(static_cast<Eigen::Index>(total), p);
    std::vector<Matrix> ft;
    for (const auto& f : spec.coefficients) ft.push_back(f.transpose());
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(total); ++t) {
      Eigen::RowVectorXd row = e.row(t);
      for (std::size_t j = 1; j <= order && static_cast<Eigen::Index>(j) <= t; ++j)
        row.noalias() += path.row(t - static_cast<Eigen::Index>(j)) * ft[j - 1];
      path.row(t) = row;
    }
    x = path.bottomRows(rows);
  }
  return MultivariateSeries(std::move(x));
}

struct PopulationTruth {
  Matrix Gamma;
  EigenDecomposition decomp;
};

/// Gamma = Cov X(t) and its eigenpairs. VMA: K + sum G(j) K G(j)^T. VAR: the
/// fixed point of the companion-form Lyapunov recursion, iterated until the
/// update falls below 1e-12 relative. Near-tied eigenvalues are reported via
/// decomp.near_degenerate rather than thrown.
[[nodiscard]] inline PopulationTruth population_truth(const DGPSpec& spec) {
  validate(spec);
  const Matrix k = noise_covariance(spec.noise);
  const auto p = k.rows();
  PopulationTruth truth;
  if (spec.kind == ModelKind::vma || spec.coefficients.empty()) {
    truth.Gamma = k;
    for (const auto& g : spec.coefficients) truth.Gamma += g * k * g.transpose();
  } else {
    const Matrix c = companion_matrix(spec.coefficients);
    const auto dim = c.rows();
    Matrix q = Matrix::Zero(dim, dim);
    q.topLeftCorner(p, p) = k;
    Matrix gamma = q;
    bool converged = false;
    for (int it = 0; it < 1'000'000; ++it) {
      Matrix next = c * gamma * c.transpose() + q;
      const double change = (next - gamma).cwiseAbs().maxCoeff();
      gamma = std::move(next);
      if (change <= 1e-12 * gamma.cwiseAbs().maxCoeff()) {
        converged = true;
        break;
      }
    }
    if (!converged) throw ConvergenceFailure("Lyapunov fixed-point iteration did not converge");
    truth.Gamma = gamma.topLeftCorner(p, p);
  }
  truth.Gamma = 0.5 * (truth.Gamma + truth.Gamma.transpose()).eval();
  truth.decomp = eigendecompose(truth.Gamma);
  return truth;
}

}  // namespace tspca
