#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "tspca/asymcov.hpp"
#include "tspca/dgp.hpp"
#include "tspca/inference.hpp"

using namespace tspca;

namespace {

EigenDecomposition with_loadings(const Matrix& loadings_rows) {
  EigenDecomposition d;
  d.values = Vector::LinSpaced(loadings_rows.rows(), static_cast<double>(loadings_rows.rows()), 1.0);
  d.vectors = loadings_rows.transpose();
  return d;
}

}  // namespace

TEST(CriticalValue, NormalQuantile) {
  EXPECT_NEAR(normal_critical_value(0.05), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_critical_value(0.01), 2.5758293035489, 1e-10);
  EXPECT_THROW(static_cast<void>(normal_critical_value(0.0)), InvalidArgument);
}

TEST(LoadingTests, SignsAndSuppression) {
  Matrix a(2, 2);
  a << 0.166, -0.5, 0.0, 0.01;
  Matrix sd(2, 2);
  sd << 0.02, 0.1, 0.3, 0.1;
  const auto r = test_loadings(with_loadings(a), sd, 0.05);
  EXPECT_EQ(r.sign_map[0][0], LoadingSign::positive);
  EXPECT_EQ(r.sign_map[0][1], LoadingSign::negative);
  EXPECT_EQ(r.sign_map[1][0], LoadingSign::suppressed);
  EXPECT_EQ(r.sign_map[1][1], LoadingSign::suppressed);
  EXPECT_NEAR(r.z(0, 0), 8.3, 1e-12);
  EXPECT_NEAR(r.p_value(0, 1), std::erfc(5.0 / std::sqrt(2.0)), 1e-15);
}

TEST(LoadingTests, BoundaryIsStrict) {
  const double z = normal_critical_value(0.05);
  Matrix a(1, 1), sd(1, 1);
  a << z;
  sd << 1.0;
  EXPECT_FALSE(test_loadings(with_loadings(a), sd, 0.05).significant[0][0]);
  a << std::nextafter(z, 10.0);
  EXPECT_TRUE(test_loadings(with_loadings(a), sd, 0.05).significant[0][0]);
}

TEST(LoadingTests, ZeroSdRules) {
  Matrix a(1, 2), sd = Matrix::Zero(1, 2);
  a << 0.3, 0.0;
  EigenDecomposition d;
  d.values = Vector{{2.0, 1.0}};
  d.vectors = Matrix::Identity(2, 2);
  d.vectors(0, 0) = 0.3;
  d.vectors(1, 0) = 0.0;
  const auto r = test_loadings(d, Matrix::Zero(2, 2), 0.05);
  EXPECT_EQ(r.sign_map[0][0], LoadingSign::positive);
  EXPECT_EQ(r.sign_map[0][1], LoadingSign::suppressed);
}

TEST(LoadingTests, Preconditions) {
  const auto d = with_loadings(Matrix::Identity(2, 2));
  EXPECT_THROW(static_cast<void>(test_loadings(d, Matrix::Zero(3, 3), 0.05)), InvalidArgument);
  EXPECT_THROW(static_cast<void>(test_loadings(d, Matrix::Zero(2, 2), 0.6)), InvalidArgument);
  EXPECT_THROW(static_cast<void>(test_loadings(d, -Matrix::Ones(2, 2), 0.05)), InvalidArgument);
  LoadingTestOptions opts;
  opts.components = 1;
  EXPECT_EQ(test_loadings(d, Matrix::Ones(2, 2), 0.05, opts).sign_map.size(), 1u);
}

TEST(LoadingTestsProperty, MonotoneInAlphaAndSignConsistent) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 200; ++trial) {
    const int p = std::uniform_int_distribution<int>(1, 6)(gen);
    const auto d = with_loadings(testing_support::random_orthonormal(static_cast<std::size_t>(p), gen()));
    Matrix sd(p, p);
    for (auto& v : sd.reshaped()) v = std::abs(z(gen)) * 0.3;
    const auto loose = test_loadings(d, sd, 0.10);
    const auto strict = test_loadings(d, sd, 0.01);
    LoadingTestOptions bonf;
    bonf.bonferroni = true;
    const auto corrected = test_loadings(d, sd, 0.10, bonf);
    for (int k = 0; k < p; ++k) {
      for (int j = 0; j < p; ++j) {
        if (strict.significant[k][j]) ASSERT_TRUE(loose.significant[k][j]);
        if (corrected.significant[k][j]) ASSERT_TRUE(loose.significant[k][j]);
        const double est = loose.estimate(k, j);
        if (loose.sign_map[k][j] == LoadingSign::positive) ASSERT_GT(est, 0.0);
        if (loose.sign_map[k][j] == LoadingSign::negative) ASSERT_LT(est, 0.0);
      }
    }
  }
}

TEST(Truncation, ThresholdScreenIsLabelledNonInferential) {
  Matrix a(1, 3);
  a << 0.5, -0.09, -0.1;
  EigenDecomposition d;
  d.values = Vector{{3.0, 2.0, 1.0}};
  d.vectors = Matrix::Identity(3, 3);
  d.vectors.col(0) = a.row(0).transpose();
  const auto r = truncation_screen(d, 0.1, 1);
  EXPECT_FALSE(r.inferential);
  EXPECT_EQ(r.sign_map[0][0], LoadingSign::positive);
  EXPECT_EQ(r.sign_map[0][1], LoadingSign::suppressed);
  EXPECT_EQ(r.sign_map[0][2], LoadingSign::negative);
  const auto text = loading_table(r, {"A", "B", "C"}).render_text();
  EXPECT_NE(text.find("not a significance test"), std::string::npos);
}

TEST(ProportionInterval, ClampAndDegenerate) {
  ProportionOfVariation r{Vector{{0.6, 0.99, 1.0}}};
  const auto zero = proportion_ci(r, Vector::Zero(3), 0.05);
  EXPECT_EQ(zero.lower, r.r);
  EXPECT_EQ(zero.upper, r.r);
  const auto ci = proportion_ci(r, Vector{{0.1, 0.02, 0.0}}, 0.05);
  EXPECT_NEAR(ci.lower(0), 0.6 - 1.959963984540054 * 0.1, 1e-12);
  EXPECT_EQ(ci.upper(1), 1.0);
  EXPECT_EQ(ci.lower(2), 1.0);
  EXPECT_THROW(static_cast<void>(proportion_ci(r, Vector::Zero(2), 0.05)), InvalidArgument);
}

TEST(ProportionInterval, IndCoverageOnIidGaussian) {
  // gamma_k of the population and the IND plug-in sd; 95% intervals should
  // cover in 93-97% of replicates.
  const Vector lambda{{5.0, 3.0, 2.0, 1.0}};
  const double gamma1 = lambda(0) / lambda.sum();
  const std::size_t n = 500;
  int covered = 0;
  const int reps = 1000;
  for (int rep = 0; rep < reps; ++rep) {
    const auto x = testing_support::scaled_panel(n, lambda, 5000 + static_cast<std::uint64_t>(rep));
    const auto asym = direct_estimate(x, Assumption::ind);
    const auto se = standard_errors(asym);
    const auto ci = proportion_ci(proportion_of_variation(asym.decomposition.values), se.sd_r, 0.05);
    covered += ci.lower(0) <= gamma1 && gamma1 <= ci.upper(0);
  }
  const double rate = static_cast<double>(covered) / reps;
  EXPECT_GE(rate, 0.93);
  EXPECT_LE(rate, 0.97);
}

TEST(Table, RenderingsAndLabels) {
  Matrix a(2, 3);
  a << 0.5, -0.4, 0.0, 0.0, 0.6, -0.7;
  EigenDecomposition d;
  d.values = Vector{{3.0, 2.0, 1.0}};
  d.vectors = Matrix::Identity(3, 3);
  d.vectors.leftCols(2) = a.transpose();
  const auto r = test_loadings(d, Matrix::Constant(3, 3, 0.01), 0.05, {false, 2});
  const auto t = loading_table(r, {"XOM", "CVX", "JPM"}, {"Energy", "Energy", "Finance"});
  const std::string csv = t.render_csv();
  EXPECT_EQ(csv, "component,XOM,CVX,JPM\nsector,Energy,Energy,Finance\nPC1,+,-,\nPC2,,+,-\n");
  const std::string text = t.render_text();
  EXPECT_NE(text.find(':'), std::string::npos);
  EXPECT_THROW(static_cast<void>(loading_table(r, {"A"})), InvalidArgument);
  EXPECT_THROW(static_cast<void>(loading_table(r, {"A", "B", "C"}, {"x"})), InvalidArgument);
  const auto blank = test_loadings(d, Matrix::Constant(3, 3, 100.0), 0.05);
  for (const auto& row : loading_table(blank, {}).cells)
    for (auto c : row) EXPECT_EQ(c, LoadingSign::suppressed);
}
