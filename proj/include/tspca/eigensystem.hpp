#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tspca/error.hpp"
#include "tspca/series.hpp"

namespace tspca {

/// Descending eigenvalues and orthonormal eigenvectors of a symmetric matrix.
///
/// Column k of `vectors` belongs to `values[k]`. Eigenvectors returned by
/// eigendecompose() carry the canonical sign (largest-magnitude entry
/// positive); align_signs() replaces that with a reference-relative sign.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;
  double source_trace = 0.0;
  /// Set when some adjacent gap is below 1e-8 of the spectrum's total mass.
  bool near_degenerate = false;

  [[nodiscard]] std::size_t p() const noexcept { return static_cast<std::size_t>(values.size()); }

  /// Loadings arranged component-by-variable: entry (k, j) is a_{kj}.
  [[nodiscard]] Matrix loadings() const { return vectors.transpose(); }
};

struct EigenOptions {
  int max_sweeps = 100;
  double tolerance = 1e-12;   // on the off-diagonal Frobenius norm, relative to ||m||_F
  double symmetry_tolerance = 1e-8;
  double degeneracy_tolerance = 1e-8;
};

namespace detail {

// Flips column k so that its entry of largest magnitude is positive. Entries
// within a relative 1e-12 of the maximum count as tied; the lowest index wins.
inline void canonicalize_signs(Matrix& vectors) {
  for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
    const double top = vectors.col(k).cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      if (std::abs(vectors(i, k)) >= top * (1.0 - 1e-12)) {
        pivot = i;
        break;
      }
    }
    if (vectors(pivot, k) < 0.0) vectors.col(k) *= -1.0;
  }
}

inline bool has_near_tie(const Vector& values, double rel_tol) {
  const double mass = values.cwiseAbs().sum();
  for (Eigen::Index k = 0; k + 1 < values.size(); ++k) {
    if (values(k) - values(k + 1) < rel_tol * mass) return true;
  }
  return false;
}

}  // namespace detail

/// Applies the canonical sign convention to an existing decomposition.
[[nodiscard]] inline EigenDecomposition canonical_signs(EigenDecomposition decomp) {
  detail::canonicalize_signs(decomp.vectors);
  return decomp;
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Rotations zero each off-diagonal pair in row order until the off-diagonal
/// Frobenius norm drops below tolerance * ||m||_F. Eigenvalues come back
/// sorted descending (stable on exact ties) with canonical signs.
[[nodiscard]] inline EigenDecomposition eigendecompose(const Matrix& m,
                                                       const EigenOptions& opts = {}) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidArgument("eigendecompose needs a non-empty square matrix");
  }
  if (!m.allFinite()) throw InvalidInput("eigendecompose: non-finite entry");
  const auto p = m.rows();
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > opts.symmetry_tolerance * std::max(scale, 1e-300)) {
    std::ostringstream msg;
    msg << "eigendecompose: matrix not symmetric (max |m - m^T| = " << asym << ")";
    throw InvalidArgument(msg.str());
  }

  Matrix a = 0.5 * (m + m.transpose());
  Matrix v = Matrix::Identity(p, p);
  const double norm = a.norm();
  const double target = opts.tolerance * norm;

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  bool converged = norm == 0.0 || off_norm() <= target;
  for (int sweep = 0; sweep < opts.max_sweeps && !converged; ++sweep) {
    for (Eigen::Index r = 0; r < p - 1; ++r) {
      for (Eigen::Index c = r + 1; c < p; ++c) {
        const double arc = a(r, c);
        if (arc == 0.0) continue;
        const double theta = (a(c, c) - a(r, r)) / (2.0 * arc);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        for (Eigen::Index k = 0; k < p; ++k) {
          const double akr = a(k, r), akc = a(k, c);
          a(k, r) = cs * akr - sn * akc;
          a(k, c) = sn * akr + cs * akc;
        }
        for (Eigen::Index k = 0; k < p; ++k) {
          const double ark = a(r, k), ack = a(c, k);
          a(r, k) = cs * ark - sn * ack;
          a(c, k) = sn * ark + cs * ack;
        }
        a(r, c) = a(c, r) = 0.0;
        for (Eigen::Index k = 0; k < p; ++k) {
          const double vkr = v(k, r), vkc = v(k, c);
          v(k, r) = cs * vkr - sn * vkc;
          v(k, c) = sn * vkr + cs * vkc;
        }
      }
    }
    converged = off_norm() <= target;
  }
  if (!converged) {
    throw ConvergenceFailure("Jacobi iteration did not converge in " +
                             std::to_string(opts.max_sweeps) + " sweeps");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  EigenDecomposition out;
  out.values.resize(p);
  out.vectors.resize(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    out.vectors.col(k) = v.col(src);
  }
  detail::canonicalize_signs(out.vectors);
  out.source_trace = m.trace();
  out.near_degenerate = detail::has_near_tie(out.values, opts.degeneracy_tolerance);
  return out;
}

/// Negates column k of decomp.vectors iff it points away from reference column k.
[[nodiscard]] inline EigenDecomposition align_signs(EigenDecomposition decomp,
                                                    const Matrix& reference) {
  if (reference.rows() != decomp.vectors.rows() || reference.cols() != decomp.vectors.cols()) {
    throw InvalidArgument("align_signs: reference shape mismatch");
  }
  for (Eigen::Index k = 0; k < decomp.vectors.cols(); ++k) {
    if (decomp.vectors.col(k).dot(reference.col(k)) < 0.0) decomp.vectors.col(k) *= -1.0;
  }
  return decomp;
}

/// Throws DegenerateEigenvalues unless the spectrum is strictly decreasing and
/// positive with every gap at least rel_tol * trace.
inline void require_distinct_eigenvalues(const Vector& values, double rel_tol = 1e-8) {
  const double trace = values.sum();
  if (!(trace > 0.0)) {
    throw DegenerateEigenvalues("eigenvalues sum to " + std::to_string(trace) +
                                "; a positive definite covariance is required");
  }
  const double floor = rel_tol * trace;
  for (Eigen::Index k = 0; k + 1 < values.size(); ++k) {
    const double gap = values(k) - values(k + 1);
    if (gap < floor) {
      std::ostringstream msg;
      msg << "eigenvalues " << (k + 1) << " and " << (k + 2) << " are tied (gap " << gap
          << " < " << floor << ")";
      throw DegenerateEigenvalues(msg.str());
    }
  }
  if (values(values.size() - 1) < floor) {
    std::ostringstream msg;
    msg << "smallest eigenvalue " << values(values.size() - 1) << " is not positive";
    throw DegenerateEigenvalues(msg.str());
  }
}

/// Cumulative proportion of variation r_k = sum_{i<=k} l_i / sum_i l_i.
struct ProportionOfVariation {
  Vector r;
};

namespace detail {

inline Vector cumulative_share(const Vector& values) {
  Vector r(values.size());
  const double total = values.sum();
  double partial = 0.0;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    partial += values(k);
    r(k) = partial / total;
  }
  r(values.size() - 1) = 1.0;
  return r;
}

}  // namespace detail

[[nodiscard]] inline ProportionOfVariation proportion_of_variation(const Vector& values) {
  if (values.size() == 0) throw InvalidArgument("proportion_of_variation: empty input");
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (!(values(k) > 0.0)) {
      throw DegenerateEigenvalues("proportion_of_variation: eigenvalue " +
                                  std::to_string(k + 1) + " is not positive");
    }
  }
  return {detail::cumulative_share(values)};
}

}  // namespace tspca
