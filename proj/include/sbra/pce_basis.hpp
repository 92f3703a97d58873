#pragma once

// Truncated multivariate orthonormal (probabilist) Hermite bases.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sbra/errors.hpp"

namespace sbra {

// Per-dimension polynomial degrees of one multivariate basis term.
using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& alpha) {
  return std::accumulate(alpha.begin(), alpha.end(), 0);
}

// Graded order: total degree ascending, then the tuples in descending
// lexicographic order. Keeps the constant term at position 0.
inline bool graded_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = total_degree(a);
  const int db = total_degree(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

inline constexpr int kMaxBasisDegree = 30;

class BasisSpec {
 public:
  BasisSpec() = default;

  BasisSpec(int dim, int max_degree, double trunc_q,
            std::vector<MultiIndex> indices)
      : dim_(dim),
        max_degree_(max_degree),
        trunc_q_(trunc_q),
        indices_(std::move(indices)) {
    validate();
  }

  int dim() const { return dim_; }
  int max_degree() const { return max_degree_; }
  double trunc_q() const { return trunc_q_; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  const MultiIndex& operator[](std::size_t i) const { return indices_[i]; }

  // Highest univariate degree used by any term.
  int max_component_degree() const {
    int k = 0;
    for (const auto& a : indices_) {
      for (int v : a) k = std::max(k, v);
    }
    return k;
  }

  // Sub-basis made of the terms at `positions` (ascending, unique).
  BasisSpec subset(std::span<const std::size_t> positions) const {
    std::vector<MultiIndex> picked;
    picked.reserve(positions.size());
    for (std::size_t pos : positions) {
      if (pos >= indices_.size()) {
        throw ParameterError("basis subset position out of range");
      }
      picked.push_back(indices_[pos]);
    }
    return BasisSpec(dim_, max_degree_, trunc_q_, std::move(picked));
  }

  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;

 private:
  void validate() const {
    if (dim_ < 1) throw ParameterError("basis dimension must be >= 1");
    if (max_degree_ < 0) throw ParameterError("max degree must be >= 0");
    if (!(trunc_q_ > 0.0 && trunc_q_ <= 1.0)) {
      throw ParameterError("truncation exponent must lie in (0, 1]");
    }
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      const auto& a = indices_[i];
      if (static_cast<int>(a.size()) != dim_) {
        throw ParameterError("multi-index length does not match dimension");
      }
      if (std::any_of(a.begin(), a.end(), [](int v) { return v < 0; })) {
        throw ParameterError("multi-index entries must be non-negative");
      }
      if (i > 0 && !graded_less(indices_[i - 1], a)) {
        throw ParameterError("multi-indices must be strictly ordered");
      }
    }
  }

  int dim_ = 1;
  int max_degree_ = 0;
  double trunc_q_ = 1.0;
  std::vector<MultiIndex> indices_;
};

// Hyperbolic q-norm of a multi-index; q = 1 gives the total degree.
inline double hyperbolic_norm(const MultiIndex& alpha, double trunc_q) {
  if (trunc_q == 1.0) return static_cast<double>(total_degree(alpha));
  double s = 0.0;
  for (int v : alpha) {
    if (v > 0) s += std::pow(static_cast<double>(v), trunc_q);
  }
  return std::pow(s, 1.0 / trunc_q);
}

namespace detail {

inline void enumerate_total_degree(int dim, int remaining, MultiIndex& current,
                                   std::vector<MultiIndex>& out) {
  const auto pos = current.size();
  if (static_cast<int>(pos) == dim) {
    out.push_back(current);
    return;
  }
  for (int v = 0; v <= remaining; ++v) {
    current.push_back(v);
    enumerate_total_degree(dim, remaining - v, current, out);
    current.pop_back();
  }
}

}  // namespace detail

// All multi-indices with (sum alpha_i^q)^(1/q) <= m, graded-lex ordered.
inline BasisSpec generate_indices(int dim, int max_degree, double trunc_q) {
  if (dim < 1) throw ParameterError("dimension must be >= 1");
  if (max_degree < 0 || max_degree > kMaxBasisDegree) {
    throw ParameterError("max degree must lie in [0, " +
                         std::to_string(kMaxBasisDegree) + "]");
  }
  if (!(trunc_q > 0.0 && trunc_q <= 1.0)) {
    throw ParameterError("truncation exponent must lie in (0, 1]");
  }
  // The hyperbolic set is contained in the total-degree set for q <= 1.
  std::vector<MultiIndex> all;
  MultiIndex current;
  current.reserve(static_cast<std::size_t>(dim));
  detail::enumerate_total_degree(dim, max_degree, current, all);

  const double bound = static_cast<double>(max_degree) * (1.0 + 1e-12);
  std::vector<MultiIndex> kept;
  kept.reserve(all.size());
  for (auto& a : all) {
    if (hyperbolic_norm(a, trunc_q) <= bound) kept.push_back(std::move(a));
  }
  std::sort(kept.begin(), kept.end(), graded_less);
  return BasisSpec(dim, max_degree, trunc_q, std::move(kept));
}

// psi_k(x) = He_k(x) / sqrt(k!), via the normalized three-term recurrence
// psi_{k+1} = (x psi_k - sqrt(k) psi_{k-1}) / sqrt(k+1).
inline double hermite_univariate(int degree, double x) {
  if (degree < 0) throw ParameterError("Hermite degree must be >= 0");
  double prev = 0.0;
  double cur = 1.0;
  for (int k = 0; k < degree; ++k) {
    const double next =
        (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

// Fills out[k] = psi_k(x) for k = 0..max_degree.
inline void hermite_table(int max_degree, double x, std::span<double> out) {
  out[0] = 1.0;
  if (max_degree >= 1) out[1] = x;
  for (int k = 1; k < max_degree; ++k) {
    out[k + 1] = (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                 std::sqrt(static_cast<double>(k + 1));
  }
}

// N x n matrix with entry (i, j) = Psi_j(x_i).
inline Eigen::MatrixXd design_matrix(const BasisSpec& basis,
                                     const Eigen::MatrixXd& points) {
  if (points.cols() != basis.dim()) {
    throw ParameterError("points have " + std::to_string(points.cols()) +
                         " columns, basis expects " +
                         std::to_string(basis.dim()));
  }
  const Eigen::Index n_points = points.rows();
  const int d = basis.dim();
  const int kmax = basis.max_component_degree();
  const auto n_terms = static_cast<Eigen::Index>(basis.size());

  Eigen::MatrixXd values(n_points, n_terms);
  // table(k, j): psi_k of coordinate j at the current point
  Eigen::MatrixXd table(kmax + 1, d);
  for (Eigen::Index i = 0; i < n_points; ++i) {
    for (int j = 0; j < d; ++j) {
      hermite_table(kmax, points(i, j),
                    std::span<double>(table.col(j).data(),
                                      static_cast<std::size_t>(kmax + 1)));
    }
    for (Eigen::Index t = 0; t < n_terms; ++t) {
      const auto& alpha = basis[static_cast<std::size_t>(t)];
      double v = 1.0;
      for (int j = 0; j < d; ++j) {
        if (alpha[static_cast<std::size_t>(j)] != 0) {
          v *= table(alpha[static_cast<std::size_t>(j)], j);
        }
      }
      values(i, t) = v;
    }
  }
  return values;
}

}  // namespace sbra
