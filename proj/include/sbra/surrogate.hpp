#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "sbra/errors.hpp"
#include "sbra/pce_basis.hpp"

namespace sbra {

// R(x) = P(x; p) / Q(x; q), numerator and denominator on their own bases.
struct RationalSurrogate {
  BasisSpec basis_p;
  BasisSpec basis_q;
  Eigen::VectorXcd p;
  Eigen::VectorXcd q;

  int dim() const { return basis_p.dim(); }
};

inline constexpr double kPoleThreshold = 1e-300;

struct Prediction {
  Eigen::VectorXcd values;
  // Rows where |Q(x)| fell below kPoleThreshold; values there are NaN.
  std::vector<Eigen::Index> near_pole;
};

inline Prediction predict(const RationalSurrogate& s,
                          const Eigen::MatrixXd& points) {
  if (s.basis_p.dim() != s.basis_q.dim()) {
    throw ParameterError("numerator and denominator dimensions differ");
  }
  if (static_cast<std::size_t>(s.p.size()) != s.basis_p.size() ||
      static_cast<std::size_t>(s.q.size()) != s.basis_q.size()) {
    throw ParameterError("coefficient count does not match basis size");
  }
  const Eigen::VectorXcd num = design_matrix(s.basis_p, points) * s.p;
  const Eigen::VectorXcd den = design_matrix(s.basis_q, points) * s.q;

  Prediction out;
  out.values.resize(points.rows());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (std::abs(den(i)) < kPoleThreshold) {
      out.values(i) = {nan, nan};
      out.near_pole.push_back(i);
    } else {
      out.values(i) = num(i) / den(i);
    }
  }
  return out;
}

}  // namespace sbra
