#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "sbra/errors.hpp"
#include "sbra/surrogate.hpp"

namespace sbra {

struct ErrorReport {
  double err_emp = 0.0;
  double rel_err_emp = 0.0;
  Eigen::Index n_validation = 0;
  Eigen::Index nan_count = 0;
};

// Mean squared error over the finite predictions, scaled by the complex
// sample variance (N - 1 divisor) of all truths.
inline ErrorReport relative_empirical_error(const Eigen::VectorXcd& predictions,
                                            const Eigen::VectorXcd& truths) {
  if (predictions.size() != truths.size()) {
    throw ParameterError("predictions and truths differ in length");
  }
  const Eigen::Index n = truths.size();
  if (n < 2) throw ParameterError("need at least two validation points");

  const std::complex<double> mean = truths.mean();
  const double var =
      (truths.array() - mean).abs2().sum() / static_cast<double>(n - 1);
  if (!(var > 0.0)) throw DegenerateError("truths have zero sample variance");

  ErrorReport r;
  r.n_validation = n;
  double sum = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto pi = predictions(i);
    if (!std::isfinite(pi.real()) || !std::isfinite(pi.imag())) {
      ++r.nan_count;
      continue;
    }
    sum += std::norm(pi - truths(i));
    ++used;
  }
  r.err_emp = used > 0 ? sum / static_cast<double>(used)
                       : std::numeric_limits<double>::quiet_NaN();
  r.rel_err_emp = r.err_emp / var;
  return r;
}

struct Sparsity {
  double total = 1.0;
  double numerator = 1.0;
  double denominator = 1.0;
};

inline Sparsity degree_of_sparsity(std::size_t retained_p, std::size_t full_p,
                                   std::size_t retained_q, std::size_t full_q) {
  if (full_p == 0 || full_q == 0 || retained_p > full_p || retained_q > full_q) {
    throw ParameterError("retained term counts exceed the full bases");
  }
  return {static_cast<double>(retained_p + retained_q) /
              static_cast<double>(full_p + full_q),
          static_cast<double>(retained_p) / static_cast<double>(full_p),
          static_cast<double>(retained_q) / static_cast<double>(full_q)};
}

inline Sparsity degree_of_sparsity(const RationalSurrogate& s,
                                   std::size_t full_p, std::size_t full_q) {
  return degree_of_sparsity(s.basis_p.size(), full_p, s.basis_q.size(), full_q);
}

inline double silverman_bandwidth(const Eigen::VectorXd& samples) {
  const auto n = static_cast<double>(samples.size());
  const double mean = samples.mean();
  const double sd =
      std::sqrt((samples.array() - mean).square().sum() / (n - 1.0));
  return 1.06 * sd * std::pow(n, -0.2);
}

inline Eigen::VectorXd kde_1d(const Eigen::VectorXd& samples,
                              const Eigen::VectorXd& grid) {
  if (samples.size() < 10) throw ParameterError("KDE needs >= 10 samples");
  if (!samples.allFinite()) throw ParameterError("KDE samples must be finite");
  const double bw = silverman_bandwidth(samples);
  if (!(bw > 0.0)) throw DegenerateError("KDE samples have zero variance");

  // Sort once so each grid point only visits samples within 8 bandwidths.
  std::vector<double> sorted(samples.data(), samples.data() + samples.size());
  std::sort(sorted.begin(), sorted.end());
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * bw *
                             std::sqrt(2.0 * std::numbers::pi));
  Eigen::VectorXd density(grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const double x = grid(g);
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - 8.0 * bw);
    auto hi = std::upper_bound(lo, sorted.end(), x + 8.0 * bw);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double z = (x - *it) / bw;
      acc += std::exp(-0.5 * z * z);
    }
    density(g) = norm * acc;
  }
  return density;
}

// Evenly spaced grid covering the samples plus a margin of `pad` bandwidths.
inline Eigen::VectorXd kde_grid(const Eigen::VectorXd& samples,
                                Eigen::Index points, double pad = 4.0) {
  const double bw = silverman_bandwidth(samples);
  return Eigen::VectorXd::LinSpaced(points, samples.minCoeff() - pad * bw,
                                    samples.maxCoeff() + pad * bw);
}

// Strict interior local maxima whose height is at least min_rel_height of
// the global maximum. The floor keeps isolated tail samples from counting.
inline std::vector<Eigen::Index> find_modes(const Eigen::VectorXd& density,
                                            double min_rel_height = 0.05) {
  std::vector<Eigen::Index> modes;
  if (density.size() < 3) return modes;
  const double floor = min_rel_height * density.maxCoeff();
  for (Eigen::Index i = 1; i + 1 < density.size(); ++i) {
    if (density(i) > density(i - 1) && density(i) >= density(i + 1) &&
        density(i) >= floor) {
      modes.push_back(i);
    }
  }
  return modes;
}

inline double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) {
    s += 0.5 * (x(i) - x(i - 1)) * (y(i) + y(i - 1));
  }
  return s;
}

// Type-7 sample quantile (linear interpolation between order statistics).
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace sbra
