#include <gtest/gtest.h>

#include <cmath>

#include "fixture_checksums.hpp"
#include "test_support.hpp"
#include "tspca/dgp.hpp"

using namespace tspca;

namespace {

double rel_frobenius(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

using testing_support::kExpectedChecksums;

}  // namespace

TEST(Fixtures, TranscribedValues) {
  EXPECT_EQ(fixture(1).coefficients.at(0)(0, 0), 0.21);
  EXPECT_EQ(fixture(1).kind, ModelKind::var);
  EXPECT_EQ(fixture(2).coefficients.at(0)(0, 0), -0.46);
  EXPECT_EQ(fixture(2).kind, ModelKind::vma);
  EXPECT_EQ(fixture(3).order(), 2u);
  EXPECT_EQ(fixture(4).order(), 3u);
  for (int id = 5; id <= 8; ++id) EXPECT_EQ(fixture(id).coefficients.at(0), fixture(2).coefficients.at(0));
  const auto t = std::get<StudentTNoise>(fixture(7).noise);
  EXPECT_EQ(t.dof, 5.0);
  EXPECT_TRUE(t.mu.isZero(0.0));
  EXPECT_EQ(t.sigma, 10.0 * Matrix::Identity(5, 5));
  EXPECT_EQ(std::get<StudentTNoise>(fixture(8).noise).dof, 8.0);
  const auto sn = std::get<SkewNormalNoise>(fixture(6).noise);
  EXPECT_EQ(sn.alpha, (Vector{{1.0, 2.0, 3.0, 4.0, 5.0}}));
  EXPECT_TRUE(sn.recenter);
  const auto c = std::get<ContaminatedNoise>(fixture(5).noise);
  EXPECT_EQ(c.outlier_means.size(), 2u);
  EXPECT_EQ(c.outlier_means[0], Vector::Constant(5, 10.0));
  EXPECT_EQ(c.outlier_means[1], Vector::Constant(5, -10.0));
  EXPECT_THROW(static_cast<void>(fixture(0)), InvalidArgument);
  EXPECT_THROW(static_cast<void>(fixture(9)), InvalidArgument);
}

TEST(Fixtures, ChecksumGuardsTranscription) {
  const std::uint64_t first = spec_checksum(fixture(1));
  for (int id = 1; id <= kFixtureCount; ++id) {
    EXPECT_EQ(spec_checksum(fixture(id)), spec_checksum(fixture(id)));
  }
  DGPSpec edited = fixture(1);
  edited.coefficients[0](4, 4) += 1e-12;
  EXPECT_NE(spec_checksum(edited), first);
  EXPECT_NE(spec_checksum(fixture(2)), spec_checksum(fixture(7)));
  EXPECT_NE(spec_checksum(fixture(7)), spec_checksum(fixture(8)));
  EXPECT_EQ(kFixtureVersion, 1);
  EXPECT_EQ(first, kExpectedChecksums[0]);
  for (int id = 1; id <= kFixtureCount; ++id) {
    EXPECT_EQ(spec_checksum(fixture(id)), kExpectedChecksums[id - 1]) << "DGP " << id;
  }
}

TEST(Fixtures, AllStationaryWithDistinctPopulationEigenvalues) {
  for (int id = 1; id <= kFixtureCount; ++id) {
    const auto spec = fixture(id);
    EXPECT_NO_THROW(validate(spec));
    const auto truth = population_truth(spec);
    EXPECT_FALSE(truth.decomp.near_degenerate) << "DGP " << id;
    EXPECT_NO_THROW(require_distinct_eigenvalues(truth.decomp.values)) << "DGP " << id;
    EXPECT_TRUE(truth.Gamma.isApprox(truth.Gamma.transpose(), 0.0));
  }
  EXPECT_LT(spectral_radius(companion_matrix(fixture(1).coefficients)), 1.0);
}

TEST(Model, NonStationaryVarRejected) {
  DGPSpec spec;
  spec.kind = ModelKind::var;
  spec.coefficients = {1.2 * Matrix::Identity(2, 2)};
  spec.noise = GaussianNoise{Vector::Zero(2), Matrix::Identity(2, 2)};
  EXPECT_THROW(validate(spec), NonStationaryModel);
  spec.coefficients = {Matrix::Identity(2, 2)};
  EXPECT_THROW(validate(spec), NonStationaryModel);
}

TEST(Model, NoiseMoments) {
  const StudentTNoise t{Vector::Zero(3), 2.0 * Matrix::Identity(3, 3), 5.0};
  EXPECT_TRUE(noise_covariance(t).isApprox(2.0 * 5.0 / 3.0 * Matrix::Identity(3, 3)));
  const SkewNormalNoise zero_skew{Vector::Zero(2), Matrix::Identity(2, 2), Vector::Zero(2), true};
  EXPECT_TRUE(noise_covariance(zero_skew).isApprox(Matrix::Identity(2, 2)));
  EXPECT_TRUE(noise_mean(zero_skew).isZero(1e-15));
}

TEST(PopulationTruth, WhiteNoiseFlaggedDegenerate) {
  DGPSpec spec;
  spec.noise = GaussianNoise{Vector::Zero(5), 10.0 * Matrix::Identity(5, 5)};
  const auto truth = population_truth(spec);
  EXPECT_EQ(truth.Gamma, 10.0 * Matrix::Identity(5, 5));
  EXPECT_TRUE(truth.decomp.near_degenerate);
}

TEST(PopulationTruth, VmaClosedFormAndVarResidual) {
  const auto g1 = fixture(2).coefficients[0];
  EXPECT_LE(rel_frobenius(population_truth(fixture(2)).Gamma, 10.0 * (Matrix::Identity(5, 5) + g1 * g1.transpose())),
            1e-14);
  const auto f1 = fixture(1).coefficients[0];
  const Matrix gamma = population_truth(fixture(1)).Gamma;
  EXPECT_LT((gamma - f1 * gamma * f1.transpose() - 10.0 * Matrix::Identity(5, 5)).norm(), 1e-10);
}

TEST(Noise, GaussianAndStudentMoments) {
  const std::size_t n = 100000;
  const Matrix g = draw_noise(GaussianNoise{Vector::Zero(5), 10.0 * Matrix::Identity(5, 5)}, n, 1);
  const Matrix cg = sample_covariance(MultivariateSeries(g));
  EXPECT_LE((cg - 10.0 * Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 0.02 * 10.0 * 1.5);
  EXPECT_LE(std::abs(cg.diagonal().mean() / 10.0 - 1.0), 0.02);

  const Matrix t = draw_noise(StudentTNoise{Vector::Zero(5), 10.0 * Matrix::Identity(5, 5), 5.0}, n, 2);
  const Matrix ct = sample_covariance(MultivariateSeries(t));
  // Fourth moments of t(5) are infinite, so the sample variance converges slowly.
  EXPECT_NEAR(ct.diagonal().mean() / (50.0 / 3.0), 1.0, 0.08);
}

TEST(Noise, SkewNormalMomentsAndZeroSkewLimit) {
  const std::size_t n = 200000;
  const auto spec = std::get<SkewNormalNoise>(fixture(6).noise);
  const Matrix draws = draw_noise(spec, n, 3);
  const MultivariateSeries s(draws);
  EXPECT_LE(sample_mean(s).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LE(rel_frobenius(sample_covariance(s), noise_covariance(spec)), 0.02);

  SkewNormalNoise raw = spec;
  raw.recenter = false;
  const Vector mean = sample_mean(MultivariateSeries(draw_noise(raw, n, 3)));
  EXPECT_LE((mean - noise_mean(raw)).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_GT(mean.minCoeff(), 0.25);  // smallest population shift is 0.337

  const SkewNormalNoise flat{Vector{{1.0, -1.0}}, Matrix{{2.0, 0.5}, {0.5, 1.0}}, Vector::Zero(2), false};
  const MultivariateSeries f(draw_noise(flat, n, 4));
  EXPECT_LE((sample_mean(f) - flat.xi).cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LE((sample_covariance(f) - flat.omega).cwiseAbs().maxCoeff(), 0.03);
}

TEST(Noise, ContaminationPositionsAndCount) {
  const auto spec = std::get<ContaminatedNoise>(fixture(5).noise);
  ContaminatedNoise tight = spec;
  tight.base.covariance = 1e-6 * Matrix::Identity(5, 5);
  const Matrix draws = draw_noise(tight, 2000, 9);
  int high = 0, low = 0;
  for (Eigen::Index t = 0; t < draws.rows(); ++t) {
    if (draws.row(t).mean() > 5.0) ++high;
    if (draws.row(t).mean() < -5.0) ++low;
  }
  EXPECT_EQ(high, 10);
  EXPECT_EQ(low, 10);
}

TEST(Simulate, DeterministicAndSeedSensitive) {
  for (int id = 1; id <= kFixtureCount; ++id) {
    const auto a = simulate(fixture(id), 300, 11);
    EXPECT_EQ(a.data(), simulate(fixture(id), 300, 11).data());
    EXPECT_EQ(a.n(), 300u);
    EXPECT_EQ(a.p(), 5u);
  }
  const auto a = simulate(fixture(2), 5000, 1).data();
  const auto b = simulate(fixture(2), 5000, 2).data();
  const double corr = (a.col(0).array() * b.col(0).array()).mean() /
                      std::sqrt(a.col(0).squaredNorm() / 5000.0 * b.col(0).squaredNorm() / 5000.0);
  EXPECT_LT(std::abs(corr), 0.06);
}

TEST(Simulate, VmaZeroEqualsNoise) {
  DGPSpec spec;
  spec.noise = GaussianNoise{Vector::Zero(3), Matrix::Identity(3, 3)};
  EXPECT_EQ(simulate(spec, 50, 5).data(), draw_noise(spec.noise, 50, 5));
}

TEST(Simulate, VarWithZeroCoefficientIsWhite) {
  DGPSpec spec;
  spec.kind = ModelKind::var;
  spec.coefficients = {Matrix::Zero(3, 3)};
  spec.noise = GaussianNoise{Vector::Zero(3), Matrix::Identity(3, 3)};
  const auto x = simulate(spec, 5000, 6);
  EXPECT_LT(sample_autocovariance(x, 1).cwiseAbs().maxCoeff(), 0.06);
}

TEST(Simulate, LongRunCovarianceMatchesTruth) {
  for (int id = 1; id <= kFixtureCount; ++id) {
    const auto spec = fixture(id);
    const Matrix c = sample_covariance(simulate(spec, 100000, 1000 + static_cast<std::uint64_t>(id)));
    const double tol = id == 7 ? 0.04 : 0.02;  // t(5) has infinite fourth moments
    EXPECT_LE(rel_frobenius(c, population_truth(spec).Gamma), tol) << "DGP " << id;
  }
}
