#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "sbra/sampling.hpp"

namespace {

TEST(Lhs, OnePointPerStratum) {
  for (auto [n, d] : std::vector<std::pair<int, int>>{{4, 1}, {1000, 3}}) {
    const auto u = sbra::lhs_uniform(n, d, 5);
    for (Eigen::Index j = 0; j < d; ++j) {
      std::set<long> strata;
      for (Eigen::Index i = 0; i < n; ++i) {
        ASSERT_GT(u(i, j), 0.0);
        ASSERT_LT(u(i, j), 1.0);
        strata.insert(static_cast<long>(std::floor(u(i, j) * n)));
      }
      EXPECT_EQ(static_cast<int>(strata.size()), n);
    }
  }
}

TEST(Lhs, NormalColumnsHaveUnitMoments) {
  const auto x = sbra::lhs_standard_normal(1000, 2, 7);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().sum() / 999.0;
    EXPECT_NEAR(mean, 0.0, 0.1);
    EXPECT_NEAR(var, 1.0, 0.1);
  }
}

TEST(Lhs, DeterministicPerSeed) {
  EXPECT_EQ(sbra::lhs_standard_normal(50, 3, 42), sbra::lhs_standard_normal(50, 3, 42));
  EXPECT_NE(sbra::lhs_standard_normal(50, 3, 42), sbra::lhs_standard_normal(50, 3, 43));
}

TEST(Lhs, RejectsEmptyDesign) {
  EXPECT_THROW(sbra::lhs_uniform(0, 3, 1), sbra::ParameterError);
  EXPECT_THROW(sbra::lhs_uniform(3, 0, 1), sbra::ParameterError);
}

TEST(Lognormal, ParametersFromMeanAndCov) {
  const auto p = sbra::lognormal_from_mean_cov(1.0, 1.0);
  EXPECT_NEAR(p.sigma_ln * p.sigma_ln, std::log(2.0), 1e-15);
  EXPECT_NEAR(p.mu_ln, -0.5 * std::log(2.0), 1e-15);
  const auto tiny = sbra::lognormal_from_mean_cov(3.0, 1e-8);
  EXPECT_NEAR(tiny.sigma_ln, 1e-8, 1e-20);
  EXPECT_NEAR(tiny.mu_ln, std::log(3.0), 1e-15);
  EXPECT_THROW(sbra::lognormal_from_mean_cov(0.0, 0.1), sbra::ParameterError);
  EXPECT_THROW(sbra::lognormal_from_mean_cov(1.0, -0.1), sbra::ParameterError);
}

TEST(Lognormal, MedianOfTransform) {
  const std::vector<sbra::MarginalSpec> m{{"rho", sbra::MarginalFamily::lognormal, 2500.0, 0.05}};
  const auto phys = sbra::to_physical(Eigen::MatrixXd::Zero(1, 1), m);
  EXPECT_NEAR(phys(0, 0), 2500.0 / std::sqrt(1.0025), 1e-9);
  EXPECT_NEAR(phys(0, 0), 2496.88, 0.01);
}

TEST(Lognormal, SampleMeanMatchesMarginal) {
  const std::vector<sbra::MarginalSpec> m{{"a", sbra::MarginalFamily::lognormal, 4.0, 0.1},
                                          {"b", sbra::MarginalFamily::lognormal, 0.04, 0.3}};
  sbra::CounterRng rng(9, 0);
  Eigen::MatrixXd z(1000000, 2);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    z(i, 0) = rng.standard_normal();
    z(i, 1) = rng.standard_normal();
  }
  const auto phys = sbra::to_physical(z, m);
  EXPECT_NEAR(phys.col(0).mean() / 4.0, 1.0, 5e-3);
  EXPECT_NEAR(phys.col(1).mean() / 0.04, 1.0, 5e-3);
}

TEST(Lognormal, RoundTripAndMonotone) {
  const std::vector<sbra::MarginalSpec> m{{"a", sbra::MarginalFamily::lognormal, 3e10, 0.1},
                                          {"b", sbra::MarginalFamily::lognormal, 0.15, 0.2}};
  const Eigen::MatrixXd z = sbra::lhs_standard_normal(200, 2, 1);
  const auto back = sbra::to_standard(sbra::to_physical(z, m), m);
  EXPECT_LT((back - z).cwiseAbs().maxCoeff(), 1e-12);

  Eigen::MatrixXd grid(101, 2);
  grid.col(0) = Eigen::VectorXd::LinSpaced(101, -5.0, 5.0);
  grid.col(1) = grid.col(0);
  const auto phys = sbra::to_physical(grid, m);
  for (Eigen::Index i = 1; i < 101; ++i) {
    EXPECT_GT(phys(i, 0), phys(i - 1, 0));
    EXPECT_GT(phys(i, 1), phys(i - 1, 1));
  }
}

TEST(Lognormal, ErrorsOnShapeAndDomain) {
  const std::vector<sbra::MarginalSpec> one{{"a", sbra::MarginalFamily::lognormal, 1.0, 0.1}};
  EXPECT_THROW(sbra::to_physical(Eigen::MatrixXd::Zero(2, 2), one), sbra::ParameterError);
  EXPECT_THROW(sbra::to_standard(Eigen::MatrixXd::Constant(2, 1, -1.0), one), sbra::ParameterError);
}

TEST(ComplexNormal, ProperWithUnitVariance) {
  sbra::CounterRng rng(4, 1);
  const auto z = sbra::proper_complex_normal(200000, rng);
  EXPECT_NEAR(z.array().abs2().mean(), 1.0, 0.01);
  EXPECT_LT(std::abs(z.array().square().mean()), 0.01);
  EXPECT_LT(std::abs(z.mean()), 0.01);
}

TEST(CounterRng, ReproducibleStreams) {
  sbra::CounterRng a(1, 2), b(1, 2), c(1, 3);
  const auto va = a.next();
  EXPECT_EQ(va, b.next());
  EXPECT_NE(va, c.next());
  for (int i = 0; i < 1000; ++i) EXPECT_LT(a.below(7), 7u);
}

}  // namespace
