#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "test_support.hpp"
#include "tspca/dgp.hpp"
#include "tspca/spectral.hpp"

using namespace tspca;
using std::numbers::pi;

namespace {

void expect_spectral_invariants(const SpectralDensityEstimate& f, double tol = 1e-8) {
  const std::size_t m = f.size();
  for (std::size_t j = 0; j < m; ++j) {
    const ComplexMatrix& h = f.matrices[j];
    EXPECT_LE((h - h.adjoint()).cwiseAbs().maxCoeff(), tol) << "not Hermitian at " << j;
    for (Eigen::Index i = 0; i < h.rows(); ++i) EXPECT_GE(h(i, i).real(), -1e-10);
    // Mirror ordinate: -w_j, present whenever the grid is symmetric.
    const std::size_t mirror = m - 1 - j;
    if (std::abs(f.frequencies[mirror] + f.frequencies[j]) < 1e-9) {
      EXPECT_LE((f.matrices[mirror] - h.conjugate()).cwiseAbs().maxCoeff(), tol) << "conjugate symmetry at " << j;
    }
  }
}

}  // namespace

TEST(Quadrature, ConstantAndCosineSquared) {
  const auto f = testing_support::constant_spectrum(Matrix::Constant(1, 1, 3.0), 4096);
  std::vector<double> ones(f.frequencies.size(), 3.0);
  EXPECT_NEAR(integrate_over_frequency(f.frequencies, ones), 2.0 * pi * 3.0, 1e-12);
  std::vector<double> c2;
  for (double w : f.frequencies) c2.push_back(std::cos(w) * std::cos(w));
  EXPECT_NEAR(integrate_over_frequency(f.frequencies, c2), pi, 1e-6);
}

TEST(Quadrature, SquaredWhiteNoiseDiagonal) {
  const double lambda = 7.0;
  const auto g = testing_support::constant_spectrum(Matrix::Constant(1, 1, lambda / (2.0 * pi)), 4096);
  std::vector<double> sq;
  for (const auto& m : g.matrices) sq.push_back(std::norm(m(0, 0)));
  EXPECT_NEAR(integrate_over_frequency(g.frequencies, sq), lambda * lambda / (2.0 * pi), 1e-10);
}

TEST(Quadrature, OddFourierGridAndRejections) {
  const auto grid = fourier_grid(7);
  ASSERT_EQ(grid.size(), 7u);
  std::vector<double> ones(7, 1.0);
  EXPECT_NEAR(integrate_over_frequency(grid, ones), 2.0 * pi, 1e-12);
  EXPECT_THROW(static_cast<void>(quadrature_weights({0.0, 0.1, 0.3})), InvalidArgument);
  EXPECT_THROW(static_cast<void>(quadrature_weights({0.0, 0.1, 0.2})), InvalidArgument);
  EXPECT_THROW(static_cast<void>(quadrature_weights({1.0})), InvalidArgument);
}

TEST(Periodogram, DftRouteMatchesLagSum) {
  for (std::size_t n : {16u, 17u, 50u}) {
    const auto x = testing_support::gaussian_panel(n, 3, n);
    const auto a = detail::periodogram_by_dft(x);
    const auto b = detail::periodogram_by_lags(x, n - 1);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
      EXPECT_NEAR(a.frequencies[j], b.frequencies[j], 1e-12);
      EXPECT_LE((a.matrices[j] - b.matrices[j]).cwiseAbs().maxCoeff(), 1e-10);
    }
    expect_spectral_invariants(a);
  }
}

TEST(Periodogram, ZeroFrequencyIsCosineSum) {
  const std::size_t n = 25;
  const auto x = testing_support::gaussian_panel(n, 2, 3);
  const auto f = raw_periodogram(x);
  Matrix expected = sample_covariance(x);
  for (std::size_t s = 1; s < n; ++s) {
    const Matrix g = sample_autocovariance(x, s);
    expected += g + g.transpose();
  }
  expected /= 2.0 * pi;
  const auto zero = std::find_if(f.frequencies.begin(), f.frequencies.end(), [](double w) { return w == 0.0; });
  ASSERT_NE(zero, f.frequencies.end());
  const ComplexMatrix& f0 = f.matrices[static_cast<std::size_t>(zero - f.frequencies.begin())];
  EXPECT_LE((f0.real() - expected).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(f0.imag().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Periodogram, ZeroSeriesAndLagBounds) {
  const MultivariateSeries zero(Matrix::Zero(10, 1));
  const auto f = raw_periodogram(zero);
  for (const auto& m : f.matrices) EXPECT_EQ(std::abs(m(0, 0)), 0.0);
  EXPECT_THROW(static_cast<void>(raw_periodogram(zero, 10)), InvalidArgument);
  EXPECT_THROW(static_cast<void>(raw_periodogram(zero, 0)), InvalidArgument);
  EXPECT_NO_THROW(static_cast<void>(raw_periodogram(zero, 3)));
}

TEST(Periodogram, WhiteNoiseLevel) {
  const auto x = testing_support::gaussian_panel(4000, 2, 19);
  const auto f = raw_periodogram(x);
  double mean = 0.0;
  for (const auto& m : f.matrices) mean += m(0, 0).real();
  mean /= static_cast<double>(f.size());
  EXPECT_NEAR(mean, 1.0 / (2.0 * pi), 0.05 / (2.0 * pi));
}

TEST(PeriodogramProperty, ParsevalIdentity) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = static_cast<std::size_t>(std::uniform_int_distribution<int>(2, 120)(gen));
    const auto p = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 5)(gen));
    const auto x = testing_support::gaussian_panel(n, p, gen());
    const Matrix c = sample_covariance(x);
    const Matrix integral = integrate_over_frequency(raw_periodogram(x));
    ASSERT_LE((integral - c).cwiseAbs().maxCoeff(), 1e-6 * std::max(1e-300, c.cwiseAbs().maxCoeff())) << "n=" << n;
  }
}

TEST(Daniell, FlatFiveTapWindow) {
  const std::size_t n = 21;
  SpectralDensityEstimate raw;
  raw.frequencies = fourier_grid(n);
  for (std::size_t j = 0; j < n; ++j) raw.matrices.push_back(ComplexMatrix::Zero(1, 1));
  raw.matrices[10](0, 0) = 1.0;
  const auto s = daniell_smooth(raw, 2);
  for (std::size_t j = 0; j < n; ++j) {
    const double expected = (j >= 8 && j <= 12) ? 0.2 : 0.0;
    EXPECT_NEAR(s.matrices[j](0, 0).real(), expected, 1e-15) << j;
  }
  // Wrap-around: an impulse at the first ordinate spreads to the last two.
  raw.matrices[10](0, 0) = 0.0;
  raw.matrices[0](0, 0) = 1.0;
  const auto w = daniell_smooth(raw, 2);
  EXPECT_NEAR(w.matrices[n - 1](0, 0).real(), 0.2, 1e-15);
  EXPECT_NEAR(w.matrices[n - 2](0, 0).real(), 0.2, 1e-15);
  EXPECT_NEAR(w.matrices[n - 3](0, 0).real(), 0.0, 1e-15);
}

TEST(Daniell, FullSmoothingGivesGridAverage) {
  const std::size_t n = 31;
  const auto x = testing_support::gaussian_panel(n, 2, 44);
  const auto raw = raw_periodogram(x);
  ComplexMatrix avg = ComplexMatrix::Zero(2, 2);
  for (const auto& m : raw.matrices) avg += m;
  avg /= static_cast<double>(raw.size());
  const auto s = daniell_smooth(raw, max_bandwidth(n));
  for (const auto& m : s.matrices) EXPECT_LE((m - avg).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(static_cast<void>(daniell_smooth(raw, max_bandwidth(n) + 1)), InvalidArgument);
  EXPECT_THROW(static_cast<void>(daniell_smooth(raw, 0)), InvalidArgument);
}

TEST(Daniell, EvenGridDuplicatesEndpoint) {
  const auto x = testing_support::gaussian_panel(40, 2, 12);
  const auto s = daniell_smooth(raw_periodogram(x), 3);
  ASSERT_EQ(s.size(), 41u);
  EXPECT_EQ(s.matrices.front(), s.matrices.back());
  expect_spectral_invariants(s);
}

TEST(Daniell, RunningSumMatchesDirectAverage) {
  const std::size_t n = 1001;
  const auto x = testing_support::gaussian_panel(n, 3, 2);
  const auto raw = raw_periodogram(x);
  const std::size_t m = 9;
  const auto s = daniell_smooth(raw, m);
  for (std::size_t j = 0; j < n; j += 37) {
    ComplexMatrix acc = ComplexMatrix::Zero(3, 3);
    for (long k = -static_cast<long>(m); k <= static_cast<long>(m); ++k) {
      acc += raw.matrices[static_cast<std::size_t>((static_cast<long>(j) + k + static_cast<long>(n)) %
                                                   static_cast<long>(n))];
    }
    acc /= static_cast<double>(2 * m + 1);
    EXPECT_LE((s.matrices[j] - acc).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Daniell, SmoothedWhiteNoiseConcentrates) {
  const std::size_t n = 5000;
  const auto x = testing_support::gaussian_panel(n, 2, 99);
  const auto raw = raw_periodogram(x);
  const double level = 1.0 / (2.0 * pi);
  // The relative sd of a (2M+1)-ordinate average is about 1/sqrt(2M+1), so
  // the 95% band is roughly 2/sqrt(2M+1).
  auto fraction_within = [&](std::size_t m, double rel) {
    const auto s = daniell_smooth(raw, m);
    std::size_t hits = 0, total = 0;
    for (const auto& f : s.matrices) {
      for (Eigen::Index i = 0; i < 2; ++i) {
        hits += std::abs(f(i, i).real() / level - 1.0) <= rel;
        ++total;
      }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
  };
  EXPECT_GE(fraction_within(30, 0.30), 0.95);
  EXPECT_GE(fraction_within(100, 0.15), 0.95);
}

TEST(Rotation, IdentityDiagonalizationAndTrace) {
  const Matrix q = testing_support::random_orthonormal(4, 5);
  const Vector lambda{{9.0, 4.0, 2.0, 0.5}};
  const Matrix gamma = q * lambda.asDiagonal() * q.transpose();
  const auto f = testing_support::constant_spectrum(gamma / (2.0 * pi), 64);
  const auto same = rotate_spectrum(f, Matrix::Identity(4, 4));
  for (std::size_t j = 0; j < f.size(); ++j) EXPECT_LE((same.matrices[j] - f.matrices[j]).cwiseAbs().maxCoeff(), 1e-14);
  const auto g = rotate_spectrum(f, q);
  EXPECT_EQ(g.kind, SpectrumKind::rotated);
  const Matrix expected = lambda.asDiagonal().toDenseMatrix() / (2.0 * pi);
  for (const auto& m : g.matrices) EXPECT_LE((m.real() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(static_cast<void>(rotate_spectrum(f, 2.0 * q)), InvalidArgument);
}

TEST(RotationProperty, HermitianAndTracePreserved) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 6)(gen));
    const auto n = static_cast<std::size_t>(std::uniform_int_distribution<int>(8, 80)(gen));
    const auto f = raw_periodogram(testing_support::gaussian_panel(n, p, gen()));
    const auto g = rotate_spectrum(f, testing_support::random_orthonormal(p, gen()));
    for (std::size_t j = 0; j < f.size(); ++j) {
      ASSERT_LE((g.matrices[j] - g.matrices[j].adjoint()).cwiseAbs().maxCoeff(), 1e-12);
      ASSERT_LE(std::abs(g.matrices[j].trace() - f.matrices[j].trace()), 1e-8 * std::max(1.0, std::abs(f.matrices[j].trace())));
    }
  }
}

TEST(ModelSpectrum, WhiteNoiseIsConstant) {
  DGPSpec spec;
  spec.noise = GaussianNoise{Vector::Zero(5), 10.0 * Matrix::Identity(5, 5)};
  const auto f = model_spectral_density(spec, 256);
  EXPECT_EQ(f.size(), 257u);
  const Matrix expected = 10.0 * Matrix::Identity(5, 5) / (2.0 * pi);
  for (const auto& m : f.matrices) EXPECT_LE((m - expected.cast<std::complex<double>>()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ModelSpectrum, IntegratesToPopulationCovariance) {
  for (int id = 1; id <= kFixtureCount; ++id) {
    const DGPSpec spec = fixture(id);
    const auto f = model_spectral_density(spec);
    expect_spectral_invariants(f, 1e-10);
    const Matrix integral = integrate_over_frequency(f);
    const Matrix gamma = population_truth(spec).Gamma;
    EXPECT_LE((integral - gamma).norm(), 1e-8 * gamma.norm()) << "DGP " << id;
  }
  // Closed form for the VMA(1) fixture: K + G K G^T with K = 10 I.
  const DGPSpec vma = fixture(2);
  const Matrix g1 = vma.coefficients[0];
  const Matrix expected = 10.0 * (Matrix::Identity(5, 5) + g1 * g1.transpose());
  EXPECT_LE((integrate_over_frequency(model_spectral_density(vma)) - expected).norm(), 1e-10 * expected.norm());
}

TEST(ModelSpectrum, VarMatchesLyapunovEquation) {
  const DGPSpec spec = fixture(1);
  const Matrix f1 = spec.coefficients[0];
  const Matrix gamma = integrate_over_frequency(model_spectral_density(spec));
  const Matrix residual = gamma - f1 * gamma * f1.transpose() - 10.0 * Matrix::Identity(5, 5);
  EXPECT_LE(residual.norm(), 1e-8 * gamma.norm());
}

TEST(Bandwidth, DefaultRule) {
  EXPECT_EQ(default_bandwidth(1000), 10u);
  EXPECT_EQ(default_bandwidth(2000), 13u);
  EXPECT_EQ(default_bandwidth(8), 2u);
  EXPECT_EQ(max_bandwidth(31), 15u);
  EXPECT_EQ(max_bandwidth(30), 14u);
}
