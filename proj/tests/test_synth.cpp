#include "blm/synth.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace blm;

TEST(SampleDesign, ExponentialMomentsAtScale) {
  const Matrix X = sample_design(100000, 1, Distribution::CenteredExponential, 7);
  const auto m = oracle::moments(X.col(0));
  EXPECT_GE(m.mean, -0.013);
  EXPECT_LE(m.mean, 0.013);
  EXPECT_GE(m.var, 0.97);
  EXPECT_LE(m.var, 1.03);
  EXPECT_GE(m.skew, 1.9);
  EXPECT_LE(m.skew, 2.1);
}

TEST(SampleDesign, GaussianSkewnessNearZero) {
  const Matrix X = sample_design(100000, 1, Distribution::Gaussian, 7);
  const auto m = oracle::moments(X.col(0));
  EXPECT_GE(m.skew, -0.03);
  EXPECT_LE(m.skew, 0.03);
}

TEST(SampleDesign, Deterministic) {
  EXPECT_EQ(sample_design(3, 2, Distribution::Gaussian, 1), sample_design(3, 2, Distribution::Gaussian, 1));
  EXPECT_NE(sample_design(3, 2, Distribution::Gaussian, 1), sample_design(3, 2, Distribution::Gaussian, 2));
}

TEST(SampleDesign, IsotropicCovariance) {
  for (auto dist : {Distribution::Gaussian, Distribution::CenteredExponential}) {
    const Matrix X = sample_design(100000, 5, dist, 3);
    const Matrix C = X.transpose() * X / static_cast<double>(X.rows());
    EXPECT_LE((C - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 0.05) << distribution_name(dist);
  }
}

TEST(SampleDesign, ColumnMomentsWithinBands) {
  const Index n = 400;
  const Matrix X = sample_design(n, 30, Distribution::CenteredExponential, 5);
  // Four standard errors: Var(x) = 1 and Var(x^2) = 8 for a centered Exp(1).
  const double mean_band = 4.0 / std::sqrt(static_cast<double>(n));
  const double var_band = 4.0 * std::sqrt(8.0 / static_cast<double>(n));
  int outside = 0;
  for (Index j = 0; j < X.cols(); ++j) {
    const auto m = oracle::moments(X.col(j));
    if (std::abs(m.mean) > mean_band || std::abs(m.var - 1.0) > var_band) ++outside;
  }
  EXPECT_LE(outside, 1);
}

TEST(SampleDesign, RejectsBadShapes) {
  EXPECT_THROW(sample_design(0, 3, Distribution::Gaussian, 1), InvalidArgument);
  EXPECT_THROW(sample_design(Index{1} << 40, Index{1} << 40, Distribution::Gaussian, 1), std::length_error);
}

TEST(GroundTruth, SparseUnitNorm) {
  const Vector b = make_ground_truth(800, 20, 3);
  EXPECT_EQ((b.array() != 0.0).count(), 20);
  EXPECT_NEAR(b.norm(), 1.0, 1e-12);
  const Vector one = make_ground_truth(1, 1, 9);
  EXPECT_NEAR(std::abs(one[0]), 1.0, 1e-15);
  EXPECT_THROW(make_ground_truth(5, 6, 1), InvalidArgument);
}

TEST(GroundTruth, SupportsDifferAcrossSeeds) {
  int differ = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Vector a = make_ground_truth(800, 20, 2 * k);
    const Vector b = make_ground_truth(800, 20, 2 * k + 1);
    if (((a.array() != 0.0) != (b.array() != 0.0)).any()) ++differ;
  }
  EXPECT_GE(differ, 99);
}

TEST(ApplyLink, ScalarDefinitions) {
  EXPECT_EQ(apply_link_scalar(LinkKind::Sign, -0.3), -1.0);
  EXPECT_EQ(apply_link_scalar(LinkKind::Sign, 0.0), 1.0);
  EXPECT_EQ(apply_link_scalar(LinkKind::Relu, -0.3), 0.0);
  EXPECT_EQ(apply_link_scalar(LinkKind::Relu, 1.7), 1.7);
  EXPECT_EQ(apply_link_scalar(LinkKind::Linear, -2.5), -2.5);
}

TEST(ApplyLink, LinearNoiselessIsExact) {
  const Matrix X = sample_design(50, 10, Distribution::Gaussian, 2);
  const Vector beta = make_ground_truth(10, 3, 4);
  const Vector y = apply_link(X, beta, LinkFunction{LinkKind::Linear, 0.0}, 0);
  EXPECT_EQ(y, Vector(X * beta));
}

TEST(ApplyLink, RejectsNonFinite) {
  Matrix X = Matrix::Ones(3, 2);
  X(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(apply_link(X, Vector::Ones(2), LinkFunction{}, 0), InvalidArgument);
  EXPECT_THROW(apply_link(Matrix::Ones(3, 2), Vector::Ones(3), LinkFunction{}, 0), InvalidArgument);
}

TEST(Dataset, StreamsAreIndependentAndReproducible) {
  const LinkFunction relu{LinkKind::Relu, 0.0};
  const auto a = make_dataset(40, 30, 4, Distribution::Gaussian, relu, 5);
  const auto b = make_dataset(40, 30, 4, Distribution::Gaussian, relu, 5);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.beta, b.beta);
  const auto test = make_test_set(a, 40);
  EXPECT_EQ(test.beta, a.beta);
  EXPECT_NE(test.X, a.X);
}

TEST(PopulationBlm, GaussianSignClosedForm) {
  const Vector beta = make_ground_truth(50, 5, 1);
  const auto blm = population_blm(beta, Distribution::Gaussian, LinkFunction{LinkKind::Sign, 0.0},
                                  1000000, 2);
  const Vector expected = oracle::kHalfNormalMean * beta;
  for (Index j = 0; j < beta.size(); ++j)
    EXPECT_LE(std::abs(blm.theta_star[j] - expected[j]), 3.0 * blm.std_error + 1e-15) << j;
  EXPECT_LE(std::abs(blm.mu_star), 3.0 * blm.mu_std_error);
}

TEST(PopulationBlm, GaussianReluClosedForm) {
  const Vector beta = make_ground_truth(50, 5, 3);
  const auto blm = population_blm(beta, Distribution::Gaussian, LinkFunction{LinkKind::Relu, 0.0},
                                  1000000, 4);
  for (Index j = 0; j < beta.size(); ++j)
    EXPECT_LE(std::abs(blm.theta_star[j] - 0.5 * beta[j]), 3.0 * blm.std_error + 1e-15) << j;
  EXPECT_LE(std::abs(blm.mu_star - 1.0 / std::sqrt(2.0 * std::numbers::pi)), 3.0 * blm.mu_std_error);
}

TEST(PopulationBlm, LinearLinkRecoversBeta) {
  for (auto dist : {Distribution::Gaussian, Distribution::CenteredExponential}) {
    const Vector beta = make_ground_truth(20, 4, 8);
    const auto blm = population_blm(beta, dist, LinkFunction{LinkKind::Linear, 0.0}, 200000, 9);
    for (Index j = 0; j < beta.size(); ++j)
      EXPECT_LE(std::abs(blm.theta_star[j] - beta[j]), 3.0 * blm.std_error + 1e-15);
    EXPECT_LE(std::abs(blm.mu_star), 3.0 * blm.mu_std_error + 1e-15);
  }
}

TEST(PopulationBlm, SignIsSymmetricUnderExponentialDesign) {
  // y = sign(beta^T x) is not symmetric when x is skewed, so only the
  // Gaussian case is asserted here; the exponential value is finite.
  const Vector beta = make_ground_truth(30, 5, 5);
  const auto g = population_blm(beta, Distribution::Gaussian, LinkFunction{LinkKind::Sign, 0.0}, 200000, 6);
  EXPECT_LE(std::abs(g.mu_star), 3.0 * g.mu_std_error);
  const auto e = population_blm(beta, Distribution::CenteredExponential,
                                LinkFunction{LinkKind::Sign, 0.0}, 200000, 6);
  EXPECT_TRUE(std::isfinite(e.mu_star));
}

TEST(PopulationBlm, RequiresEnoughSamples) {
  EXPECT_THROW(population_blm(Vector::Ones(2), Distribution::Gaussian, LinkFunction{}, 9999, 1),
               InvalidArgument);
}

TEST(PopulationBlm, ResidualIsOrthogonalToFreshInputs) {
  const Vector beta = make_ground_truth(10, 3, 12);
  const LinkFunction sign{LinkKind::Sign, 0.0};
  const auto blm = population_blm(beta, Distribution::Gaussian, sign, 1000000, 13);
  // Fresh MC batch: E[w x] should vanish coordinatewise, up to the error of
  // this batch plus the error already in theta*.
  const auto ds = sample_dataset(beta, 1000000, Distribution::Gaussian, sign, 14, 15);
  const Vector w = residual_vector(ds.X, ds.y, blm);
  const double N = static_cast<double>(w.size());
  for (Index j = 0; j < beta.size(); ++j) {
    const Eigen::ArrayXd z = w.array() * ds.X.col(j).array();
    const double mean = z.mean();
    const double se = std::sqrt((z - mean).square().sum() / (N - 1.0) / N);
    const double tol = 5.0 * std::hypot(se, blm.coord_std_error[j]);
    EXPECT_LE(std::abs(mean), tol) << j;
  }
}

TEST(Orlicz, ZeroResidualGivesZero) {
  const Vector beta = make_ground_truth(15, 3, 1);
  const LinkFunction lin{LinkKind::Linear, 0.0};
  auto ds = sample_dataset(beta, 200, Distribution::Gaussian, lin, 1, 2);
  PopulationBlm exact;
  exact.theta_star = beta;
  exact.mu_star = 0.0;
  EXPECT_EQ(residual_sigma_estimate(ds, exact, 2), 0.0);
  EXPECT_EQ(residual_vector(ds.X, ds.y, exact).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Orlicz, GaussianSignResidualIsModerate) {
  const Vector beta = make_ground_truth(40, 5, 2);
  const LinkFunction sign{LinkKind::Sign, 0.0};
  const auto blm = population_blm(beta, Distribution::Gaussian, sign, 200000, 3);
  auto ds = sample_dataset(beta, 2000, Distribution::Gaussian, sign, 4, 5);
  const double sigma = residual_sigma_estimate(ds, blm, 2);
  EXPECT_GT(sigma, 0.0);
  EXPECT_LE(sigma, 3.0);
}

TEST(Orlicz, HomogeneousInNoiseLevel) {
  const Vector beta = make_ground_truth(20, 3, 6);
  PopulationBlm exact;
  exact.theta_star = beta;
  exact.mu_star = 0.0;
  auto a = sample_dataset(beta, 20000, Distribution::Gaussian, LinkFunction{LinkKind::Linear, 0.5}, 7, 8);
  auto b = sample_dataset(beta, 20000, Distribution::Gaussian, LinkFunction{LinkKind::Linear, 1.0}, 7, 9);
  const double ratio = residual_sigma_estimate(b, exact, 2) / residual_sigma_estimate(a, exact, 2);
  EXPECT_NEAR(ratio, 2.0, 0.2);
}

TEST(Orlicz, SubexponentialIndexShrinksHigherMoments) {
  Vector w = Vector::Ones(10);
  // Constant |w| = 1: moments are all 1, so the maximum is at m = 1.
  EXPECT_DOUBLE_EQ(orlicz_norm_estimate(w, 1), 1.0);
  EXPECT_DOUBLE_EQ(orlicz_norm_estimate(w, 2), 1.0);
  EXPECT_THROW(orlicz_norm_estimate(w, 3), InvalidArgument);
}

TEST(Names, RoundTrip) {
  for (auto d : {Distribution::Gaussian, Distribution::CenteredExponential})
    EXPECT_EQ(parse_distribution(distribution_name(d)), d);
  for (auto k : {LinkKind::Linear, LinkKind::Sign, LinkKind::Relu}) EXPECT_EQ(parse_link(link_name(k)), k);
  EXPECT_THROW(parse_distribution("cauchy"), InvalidArgument);
  EXPECT_THROW(parse_link("tanh"), InvalidArgument);
}
