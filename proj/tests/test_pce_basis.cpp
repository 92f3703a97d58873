#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "sbra/pce_basis.hpp"
#include "sbra/sampling.hpp"

namespace {

using sbra::generate_indices;
using sbra::MultiIndex;

std::set<MultiIndex> as_set(const std::vector<std::vector<int>>& v) {
  return {v.begin(), v.end()};
}

TEST(Hermite, LowDegreeValues) {
  EXPECT_DOUBLE_EQ(sbra::hermite_univariate(0, 0.7), 1.0);
  EXPECT_DOUBLE_EQ(sbra::hermite_univariate(1, 0.7), 0.7);
  EXPECT_NEAR(sbra::hermite_univariate(2, 0.0), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(sbra::hermite_univariate(3, 1.5), (1.5 * 1.5 * 1.5 - 4.5) / std::sqrt(6.0), 1e-14);
}

TEST(Hermite, MatchesRawRecurrence) {
  for (int k = 0; k <= 20; ++k) {
    for (double x : {-4.0, -1.3, 0.0, 0.25, 2.2, 5.0}) {
      const double ref = oracle::hermite_raw_normalized(k, x);
      EXPECT_NEAR(sbra::hermite_univariate(k, x), ref, 1e-11 * std::max(1.0, std::abs(ref)))
          << "k=" << k << " x=" << x;
    }
  }
}

TEST(Hermite, OrthonormalUnderGaussHermiteQuadrature) {
  const auto rule = oracle::gauss_hermite(40);
  EXPECT_NEAR(rule.weights.sum(), 1.0, 1e-13);
  for (int j = 0; j <= 10; ++j) {
    for (int k = 0; k <= 10; ++k) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        s += rule.weights(i) * sbra::hermite_univariate(j, rule.nodes(i)) *
             sbra::hermite_univariate(k, rule.nodes(i));
      }
      EXPECT_NEAR(s, j == k ? 1.0 : 0.0, 1e-10) << j << "," << k;
    }
  }
}

TEST(Hermite, NegativeDegreeThrows) {
  EXPECT_THROW(sbra::hermite_univariate(-1, 0.0), sbra::ParameterError);
}

TEST(GenerateIndices, OneDimensionCubic) {
  const auto b = generate_indices(1, 3, 1.0);
  const std::vector<MultiIndex> expect{{0}, {1}, {2}, {3}};
  EXPECT_EQ(b.indices(), expect);
}

TEST(GenerateIndices, HyperbolicTwoDimensions) {
  const auto b = generate_indices(2, 2, 0.5);
  EXPECT_EQ(as_set(b.indices()), (std::set<MultiIndex>{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {0, 2}}));
}

TEST(GenerateIndices, TotalDegreeCountIsBinomial) {
  for (int d = 1; d <= 10; ++d) {
    for (int m = 0; m <= 10; ++m) {
      if (d >= 8 && m >= 8) continue;  // covered by the acceptance run
      EXPECT_EQ(static_cast<double>(generate_indices(d, m, 1.0).size()),
                oracle::binomial(d + m, m))
          << "d=" << d << " m=" << m;
    }
  }
}

TEST(GenerateIndices, MatchesBruteForceEnumeration) {
  for (auto [d, m, q] : std::vector<std::tuple<int, int, double>>{
           {2, 6, 0.5}, {3, 5, 0.7}, {4, 4, 0.6}, {7, 5, 0.7}, {7, 3, 1.0}, {5, 6, 0.8}}) {
    const auto b = generate_indices(d, m, q);
    EXPECT_EQ(as_set(b.indices()), as_set(oracle::brute_force_indices(d, m, q)))
        << "d=" << d << " m=" << m << " q=" << q;
    EXPECT_EQ(b.size(), as_set(b.indices()).size()) << "duplicates";
  }
}

TEST(GenerateIndices, FrameAndPlateTermCounts) {
  EXPECT_EQ(generate_indices(7, 10, 0.5).size(), 316u);
  EXPECT_EQ(generate_indices(7, 5, 0.7).size(), 134u);
  EXPECT_EQ(generate_indices(7, 5, 0.8).size(), 197u);
  EXPECT_EQ(generate_indices(7, 3, 1.0).size(), 120u);
  EXPECT_EQ(generate_indices(11, 10, 0.5).size(), 826u);
  EXPECT_EQ(generate_indices(11, 5, 0.8).size(), 551u);
  EXPECT_EQ(generate_indices(11, 3, 1.0).size(), 364u);
}

TEST(GenerateIndices, GradedOrderConstantFirst) {
  const auto b = generate_indices(4, 5, 0.7);
  EXPECT_EQ(b[0], MultiIndex(4, 0));
  for (std::size_t i = 1; i < b.size(); ++i) {
    EXPECT_LE(sbra::total_degree(b[i - 1]), sbra::total_degree(b[i]));
    EXPECT_TRUE(sbra::graded_less(b[i - 1], b[i]));
  }
}

TEST(GenerateIndices, SmallerTruncationGivesSubset) {
  for (double q2 : {0.4, 0.6, 0.75}) {
    const auto small = as_set(generate_indices(5, 6, q2).indices());
    const auto big = as_set(generate_indices(5, 6, 0.9).indices());
    EXPECT_TRUE(std::includes(big.begin(), big.end(), small.begin(), small.end()));
  }
}

TEST(GenerateIndices, InvalidArgumentsThrow) {
  EXPECT_THROW(generate_indices(0, 3, 1.0), sbra::ParameterError);
  EXPECT_THROW(generate_indices(2, -1, 1.0), sbra::ParameterError);
  EXPECT_THROW(generate_indices(2, 3, 0.0), sbra::ParameterError);
  EXPECT_THROW(generate_indices(2, 3, 1.5), sbra::ParameterError);
  EXPECT_THROW(generate_indices(2, sbra::kMaxBasisDegree + 1, 1.0), sbra::ParameterError);
}

TEST(DesignMatrix, ConstantColumnAndLinearTerms) {
  const sbra::BasisSpec lin(2, 1, 1.0, {{1, 0}, {0, 1}});
  Eigen::MatrixXd x(1, 2);
  x << 0.3, -1.7;
  const auto m = sbra::design_matrix(lin, x);
  EXPECT_DOUBLE_EQ(m(0, 0), 0.3);
  EXPECT_DOUBLE_EQ(m(0, 1), -1.7);

  std::mt19937_64 rng(3);
  const auto pts = oracle::normal_matrix(50, 3, rng);
  const auto full = sbra::design_matrix(generate_indices(3, 4, 1.0), pts);
  EXPECT_TRUE(full.col(0).isOnes());
}

TEST(DesignMatrix, MatchesEntrywiseOracle) {
  std::mt19937_64 rng(11);
  const auto pts = oracle::normal_matrix(40, 4, rng);
  const auto basis = generate_indices(4, 6, 0.7);
  const auto got = sbra::design_matrix(basis, pts);
  const auto ref = oracle::naive_design(basis.indices(), pts);
  EXPECT_LT((got - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DesignMatrix, OddTermsVanishAtOrigin) {
  const auto basis = generate_indices(3, 5, 1.0);
  const auto m = sbra::design_matrix(basis, Eigen::MatrixXd::Zero(1, 3));
  for (std::size_t t = 0; t < basis.size(); ++t) {
    const bool odd = std::any_of(basis[t].begin(), basis[t].end(), [](int v) { return v % 2 == 1; });
    if (odd) {
      EXPECT_EQ(m(0, static_cast<Eigen::Index>(t)), 0.0);
    }
  }
}

TEST(DesignMatrix, UnitSecondMomentsUnderSampling) {
  const Eigen::Index n = 100000;
  const auto pts = sbra::lhs_standard_normal(n, 2, 17);
  const auto m = sbra::design_matrix(generate_indices(2, 2, 1.0), pts);
  const Eigen::VectorXd second = m.array().square().colwise().mean();
  for (Eigen::Index j = 0; j < second.size(); ++j) {
    EXPECT_NEAR(second(j), 1.0, 5.0 / std::sqrt(static_cast<double>(n))) << j;
  }
}

TEST(DesignMatrix, DimensionMismatchThrows) {
  EXPECT_THROW(sbra::design_matrix(generate_indices(3, 2, 1.0), Eigen::MatrixXd::Zero(4, 2)),
               sbra::ParameterError);
}

TEST(BasisSpec, SubsetKeepsOrderAndRejectsOutOfRange) {
  const auto b = generate_indices(2, 3, 1.0);
  const std::vector<std::size_t> pos{0, 2, 5};
  const auto s = b.subset(pos);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1], b[2]);
  const std::vector<std::size_t> bad{0, 99};
  EXPECT_THROW(b.subset(bad), sbra::ParameterError);
}

}  // namespace
