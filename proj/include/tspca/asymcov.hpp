#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tspca/eigensystem.hpp"
#include "tspca/error.hpp"
#include "tspca/series.hpp"
#include "tspca/spectral.hpp"

namespace tspca {

/// Dependence structure assumed when computing asymptotic covariances.
///  ad  - full time-series asymptotics with Gaussian (zero fourth cumulant) innovations
///  dag - principal-component spectrum replaced by its diagonal
///  ind - independent observations (classical PCA)
enum class Assumption { ad, dag, ind };

[[nodiscard]] constexpr std::string_view to_string(Assumption a) noexcept {
  switch (a) {
    case Assumption::ad: return "AD";
    case Assumption::dag: return "DAG";
    case Assumption::ind: return "IND";
  }
  return "?";
}

/// Limiting covariances of sqrt(n)(l - lambda), sqrt(n)(a_k - phi_k) and
/// sqrt(n)(r_k - gamma_k).
struct EigenAsymptotics {
  Assumption assumption = Assumption::ad;
  Matrix B;                    // p x p, eigenvalues
  std::vector<Matrix> Sigma;   // Sigma[k], p x p, loadings of component k
  Vector eta;                  // eta_k (standard deviation scale), eta[p-1] = 0
  std::size_t scale_n = 0;     // sample size for per-sample standard errors
  EigenDecomposition decomposition;  // eigenpairs the formulas were evaluated at
};

struct StandardErrors {
  Vector sd_values;    // sqrt(B_ii / n)
  Matrix sd_loadings;  // (k, j) = sqrt(Sigma_k[j, j] / n), component-by-variable
  Vector sd_r;         // eta_k / sqrt(n)
};

struct AsymptoticsOptions {
  double degeneracy_tolerance = 1e-8;
};

namespace detail {

inline void check_spectrum_shape(const SpectralDensityEstimate& g, const EigenDecomposition& decomp) {
  if (g.p() != decomp.p()) throw InvalidArgument("spectrum and decomposition dimensions differ");
  if (g.size() < 2) throw InvalidArgument("spectrum grid is empty");
}

// All pairwise integrals P[(a,b),(c,d)] = \int g_ab(w) conj(g_cd(w)) dw, with
// (a,b) flattened row-major to a*p + b.
class SpectralProducts {
 public:
  explicit SpectralProducts(const SpectralDensityEstimate& g) : p_(static_cast<Eigen::Index>(g.p())) {
    const auto w = quadrature_weights(g.frequencies);
    const auto grid = static_cast<Eigen::Index>(g.size());
    const Eigen::Index q = p_ * p_;
    Eigen::MatrixXcd v(grid, q);
    for (Eigen::Index j = 0; j < grid; ++j) {
      const auto& m = g.matrices[static_cast<std::size_t>(j)];
      for (Eigen::Index a = 0; a < p_; ++a)
        for (Eigen::Index b = 0; b < p_; ++b) v(j, a * p_ + b) = m(a, b);
    }
    Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(w.data(), grid);
    Eigen::MatrixXcd weighted = weights.asDiagonal() * v.conjugate();
    table_ = v.transpose() * weighted;
  }

  [[nodiscard]] std::complex<double> operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c,
                                                Eigen::Index d) const {
    return table_(a * p_ + b, c * p_ + d);
  }

  /// C(u_ij, u_kl) = 2 pi \int {g_ik conj(g_jl) + g_il conj(g_jk)} dw.
  [[nodiscard]] double cov_u(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) const {
    return 2.0 * std::numbers::pi * ((*this)(i, k, j, l) + (*this)(i, l, j, k)).real();
  }

 private:
  Eigen::Index p_;
  Eigen::MatrixXcd table_;
};

inline Vector eta_from_b(const Matrix& b, const Vector& values) {
  const auto p = values.size();
  Vector eta = Vector::Zero(p);
  const double trace = values.sum();
  const Vector gamma = cumulative_share(values);
  for (Eigen::Index k = 0; k + 1 < p; ++k) {
    Vector beta(p);
    for (Eigen::Index i = 0; i < p; ++i) beta(i) = ((i <= k ? 1.0 : 0.0) - gamma(k)) / trace;
    eta(k) = std::sqrt(std::max(0.0, beta.dot(b * beta)));
  }
  return eta;
}

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace detail

/// Gaussian (zero fourth cumulant) covariance C(u_ij, u_kl) for the rotated
/// spectrum g; indices are 0-based.
[[nodiscard]] inline double cov_u_gaussian(const SpectralDensityEstimate& g, std::size_t i, std::size_t j,
                                           std::size_t k, std::size_t l) {
  const std::size_t p = g.p();
  if (i >= p || j >= p || k >= p || l >= p) throw InvalidArgument("cov_u_gaussian: index out of range");
  std::vector<std::complex<double>> integrand;
  integrand.reserve(g.size());
  const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
  const auto kk = static_cast<Eigen::Index>(k), ll = static_cast<Eigen::Index>(l);
  for (const auto& m : g.matrices)
    integrand.push_back(m(ii, kk) * std::conj(m(jj, ll)) + m(ii, ll) * std::conj(m(jj, kk)));
  return 2.0 * std::numbers::pi * integrate_over_frequency(g.frequencies, integrand).real();
}

/// Full time-series asymptotics from the principal-component spectrum g.
[[nodiscard]] inline EigenAsymptotics asymptotics_ad(const SpectralDensityEstimate& g,
                                                     const EigenDecomposition& decomp,
                                                     const AsymptoticsOptions& opts = {}) {
  detail::check_spectrum_shape(g, decomp);
  require_distinct_eigenvalues(decomp.values, opts.degeneracy_tolerance);
  const auto p = static_cast<Eigen::Index>(decomp.p());
  const detail::SpectralProducts prod(g);
  const Vector& lambda = decomp.values;
  const Matrix& phi = decomp.vectors;

  EigenAsymptotics out;
  out.assumption = Assumption::ad;
  out.decomposition = decomp;
  out.B.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) out.B(i, j) = prod.cov_u(i, i, j, j);
  out.B = detail::symmetrized(out.B);

  out.Sigma.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) {
    Matrix w = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i == k) continue;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (j == k) continue;
        w(i, j) = prod.cov_u(i, k, j, k) / ((lambda(k) - lambda(i)) * (lambda(k) - lambda(j)));
      }
    }
    out.Sigma.push_back(detail::symmetrized(phi * detail::symmetrized(w) * phi.transpose()));
  }
  out.eta = detail::eta_from_b(out.B, lambda);
  return out;
}

/// Asymptotics with the principal-component spectrum replaced by its diagonal.
[[nodiscard]] inline EigenAsymptotics asymptotics_dag(const SpectralDensityEstimate& g,
                                                      const EigenDecomposition& decomp,
                                                      const AsymptoticsOptions& opts = {}) {
  detail::check_spectrum_shape(g, decomp);
  require_distinct_eigenvalues(decomp.values, opts.degeneracy_tolerance);
  const auto p = static_cast<Eigen::Index>(decomp.p());
  const Vector& lambda = decomp.values;
  const Matrix& phi = decomp.vectors;

  // D(a, b) = \int g_aa(w) g_bb(w) dw over the real diagonal auto-spectra.
  const auto weights = quadrature_weights(g.frequencies);
  Matrix d = Matrix::Zero(p, p);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const Vector diag = g.matrices[j].diagonal().real();
    d.noalias() += weights[j] * diag * diag.transpose();
  }

  EigenAsymptotics out;
  out.assumption = Assumption::dag;
  out.decomposition = decomp;
  out.B = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) out.B(i, i) = 4.0 * std::numbers::pi * d(i, i);
  out.Sigma.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) {
    Vector w = Vector::Zero(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i == k) continue;
      const double gap = lambda(k) - lambda(i);
      w(i) = 2.0 * std::numbers::pi * d(k, i) / (gap * gap);
    }
    out.Sigma.push_back(detail::symmetrized(phi * w.asDiagonal() * phi.transpose()));
  }
  out.eta = detail::eta_from_b(out.B, lambda);
  return out;
}

/// Classical independent-observation asymptotics; closed form in the eigenpairs.
[[nodiscard]] inline EigenAsymptotics asymptotics_ind(const EigenDecomposition& decomp,
                                                      const AsymptoticsOptions& opts = {}) {
  require_distinct_eigenvalues(decomp.values, opts.degeneracy_tolerance);
  const auto p = static_cast<Eigen::Index>(decomp.p());
  const Vector& lambda = decomp.values;
  const Matrix& phi = decomp.vectors;

  EigenAsymptotics out;
  out.assumption = Assumption::ind;
  out.decomposition = decomp;
  out.B = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) out.B(i, i) = 2.0 * lambda(i) * lambda(i);
  out.Sigma.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) {
    Vector w = Vector::Zero(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i == k) continue;
      const double gap = lambda(k) - lambda(i);
      w(i) = lambda(k) * lambda(i) / (gap * gap);
    }
    out.Sigma.push_back(detail::symmetrized(phi * w.asDiagonal() * phi.transpose()));
  }
  out.eta = detail::eta_from_b(out.B, lambda);
  return out;
}

/// Dispatches to the engine for `assumption`; g is ignored under IND.
[[nodiscard]] inline EigenAsymptotics asymptotics(Assumption assumption, const SpectralDensityEstimate& g,
                                                  const EigenDecomposition& decomp,
                                                  const AsymptoticsOptions& opts = {}) {
  switch (assumption) {
    case Assumption::ad: return asymptotics_ad(g, decomp, opts);
    case Assumption::dag: return asymptotics_dag(g, decomp, opts);
    case Assumption::ind: return asymptotics_ind(decomp, opts);
  }
  throw InvalidArgument("unknown assumption");
}

struct DirectOptions {
  std::optional<std::size_t> bandwidth;  // Daniell M; default ceil(n^{1/3})
  AsymptoticsOptions asymptotics;
};

/// Plug-in estimate: eigenpairs of C_n, Daniell-smoothed periodogram rotated
/// into the sample principal-component basis, then the chosen engine.
[[nodiscard]] inline EigenAsymptotics direct_estimate(const MultivariateSeries& series, Assumption assumption,
                                                      const DirectOptions& opts = {}) {
  const EigenDecomposition decomp = eigendecompose(sample_covariance(series));
  require_distinct_eigenvalues(decomp.values, opts.asymptotics.degeneracy_tolerance);
  EigenAsymptotics out;
  if (assumption == Assumption::ind) {
    out = asymptotics_ind(decomp, opts.asymptotics);
  } else {
    const std::size_t m = opts.bandwidth.value_or(default_bandwidth(series.n()));
    const auto smoothed = daniell_smooth(raw_periodogram(series), m);
    out = asymptotics(assumption, rotate_spectrum(smoothed, decomp.vectors), decomp, opts.asymptotics);
  }
  out.scale_n = series.n();
  return out;
}

[[nodiscard]] inline StandardErrors standard_errors(const EigenAsymptotics& asym) {
  if (asym.scale_n == 0) throw InvalidArgument("standard_errors: scale_n is not set");
  const auto p = asym.B.rows();
  const double n = static_cast<double>(asym.scale_n);
  StandardErrors se;
  se.sd_values = (asym.B.diagonal().cwiseMax(0.0) / n).cwiseSqrt();
  se.sd_loadings.resize(p, p);
  for (Eigen::Index k = 0; k < p; ++k)
    for (Eigen::Index j = 0; j < p; ++j)
      se.sd_loadings(k, j) = std::sqrt(std::max(0.0, asym.Sigma[static_cast<std::size_t>(k)](j, j)) / n);
  se.sd_r = asym.eta / std::sqrt(n);
  return se;
}

}  // namespace tspca
