#pragma once

// Experimental designs in standard-normal space and lognormal marginals.

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sbra/errors.hpp"

namespace sbra {

// Counter-based generator: splitmix64 over a stream key derived from
// (seed, stream). Identical output on every platform.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound), rejection sampling without bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % bound;
  }

  double standard_normal();

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline double std_normal_quantile(double u) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, u);
}

inline double std_normal_cdf(double x) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::cdf(standard, x);
}

inline double CounterRng::standard_normal() {
  return std_normal_quantile(uniform());
}

// Draw from the proper standard complex normal: Re, Im ~ N(0, 1/2).
inline Eigen::VectorXcd proper_complex_normal(Eigen::Index n, CounterRng& rng) {
  Eigen::VectorXcd z(n);
  const double s = std::sqrt(0.5);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = rng.standard_normal();
    const double im = rng.standard_normal();
    z(i) = {s * re, s * im};
  }
  return z;
}

// n x d Latin hypercube on (0,1): one uniform draw per stratum in each
// column, strata permuted independently per column.
inline Eigen::MatrixXd lhs_uniform(Eigen::Index n, Eigen::Index d,
                                   std::uint64_t seed) {
  if (n < 1 || d < 1) throw ParameterError("LHS needs n >= 1 and d >= 1");
  Eigen::MatrixXd u(n, d);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    CounterRng rng(seed, static_cast<std::uint64_t>(j));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const auto k = static_cast<Eigen::Index>(
          rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(k)]);
    }
    const double width = 1.0 / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto stratum = static_cast<double>(perm[static_cast<std::size_t>(i)]);
      u(i, j) = (stratum + rng.uniform()) * width;
    }
  }
  return u;
}

inline Eigen::MatrixXd lhs_standard_normal(Eigen::Index n, Eigen::Index d,
                                           std::uint64_t seed) {
  return lhs_uniform(n, d, seed).unaryExpr(
      [](double u) { return std_normal_quantile(u); });
}

enum class MarginalFamily { lognormal };

struct MarginalSpec {
  std::string name;
  MarginalFamily family = MarginalFamily::lognormal;
  double mean = 1.0;
  double cov = 0.1;

  friend bool operator==(const MarginalSpec&, const MarginalSpec&) = default;
};

struct LognormalParams {
  double mu_ln;
  double sigma_ln;
};

inline LognormalParams lognormal_from_mean_cov(double mean, double cov) {
  if (!(mean > 0.0) || !(cov > 0.0)) {
    throw ParameterError("lognormal mean and cov must be positive");
  }
  const double var_ln = std::log1p(cov * cov);
  return {std::log(mean) - 0.5 * var_ln, std::sqrt(var_ln)};
}

namespace detail {

inline std::vector<LognormalParams> marginal_params(
    const std::vector<MarginalSpec>& marginals, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(marginals.size()) != cols) {
    throw ParameterError("expected " + std::to_string(cols) +
                         " marginals, got " + std::to_string(marginals.size()));
  }
  std::vector<LognormalParams> params;
  params.reserve(marginals.size());
  for (const auto& m : marginals) {
    params.push_back(lognormal_from_mean_cov(m.mean, m.cov));
  }
  return params;
}

}  // namespace detail

// x_phys = exp(mu_ln + sigma_ln * x_std), column by column.
inline Eigen::MatrixXd to_physical(const Eigen::MatrixXd& std_points,
                                   const std::vector<MarginalSpec>& marginals) {
  const auto params = detail::marginal_params(marginals, std_points.cols());
  Eigen::MatrixXd phys(std_points.rows(), std_points.cols());
  for (Eigen::Index j = 0; j < std_points.cols(); ++j) {
    const auto [mu, sigma] = params[static_cast<std::size_t>(j)];
    phys.col(j) = (mu + sigma * std_points.col(j).array()).exp().matrix();
  }
  return phys;
}

inline Eigen::MatrixXd to_standard(const Eigen::MatrixXd& phys_points,
                                   const std::vector<MarginalSpec>& marginals) {
  const auto params = detail::marginal_params(marginals, phys_points.cols());
  if ((phys_points.array() <= 0.0).any()) {
    throw ParameterError("lognormal coordinates must be positive");
  }
  Eigen::MatrixXd std_points(phys_points.rows(), phys_points.cols());
  for (Eigen::Index j = 0; j < phys_points.cols(); ++j) {
    const auto [mu, sigma] = params[static_cast<std::size_t>(j)];
    std_points.col(j) = ((phys_points.col(j).array().log() - mu) / sigma).matrix();
  }
  return std_points;
}

// Experimental design: inputs in both coordinate systems plus responses.
struct Dataset {
  Eigen::MatrixXd inputs_std;
  Eigen::MatrixXd inputs_phys;
  Eigen::VectorXcd responses;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return inputs_std.rows(); }
  Eigen::Index dim() const { return inputs_std.cols(); }
};

}  // namespace sbra
