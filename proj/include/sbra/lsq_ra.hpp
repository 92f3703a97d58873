#pragma once

// Least-squares rational approximation: minimize sum_k |y_k Q(x_k) - P(x_k)|^2
// over unit-norm [p; q], solved by SVD of the Hermitian Gram matrix.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <complex>
#include <string>
#include <vector>

#include "sbra/errors.hpp"

namespace sbra {

struct HomogeneousSystem {
  Eigen::MatrixXcd a;
  Eigen::Index n_p = 0;
  Eigen::Index n_q = 0;
};

inline HomogeneousSystem build_system(const Eigen::MatrixXd& psi_p,
                                      const Eigen::MatrixXd& psi_q,
                                      const Eigen::VectorXcd& y) {
  if (psi_p.rows() != psi_q.rows() || psi_p.rows() != y.size()) {
    throw ParameterError("design matrices and responses disagree on N");
  }
  const Eigen::Index n_p = psi_p.cols();
  const Eigen::Index n_q = psi_q.cols();

  // Residual operator B = [-Psi_P, diag(y) Psi_Q]; A = B^H B.
  const Eigen::MatrixXcd yq = y.asDiagonal() * psi_q.cast<std::complex<double>>();
  HomogeneousSystem sys;
  sys.n_p = n_p;
  sys.n_q = n_q;
  sys.a.resize(n_p + n_q, n_p + n_q);
  sys.a.topLeftCorner(n_p, n_p) = (psi_p.transpose() * psi_p).cast<std::complex<double>>();
  sys.a.topRightCorner(n_p, n_q) = -psi_p.transpose().cast<std::complex<double>>() * yq;
  sys.a.bottomLeftCorner(n_q, n_p) = sys.a.topRightCorner(n_p, n_q).adjoint();
  sys.a.bottomRightCorner(n_q, n_q) = yq.adjoint() * yq;
  return sys;
}

struct LsqSolution {
  Eigen::VectorXcd p;
  Eigen::VectorXcd q;
  double smallest_singular_value = 0.0;
  // Set when the two smallest singular values coincide to rounding.
  bool degenerate_null_space = false;
  std::vector<std::string> warnings;
};

// Right-singular vector of the smallest singular value, unit 2-norm, phase
// fixed so the largest-magnitude entry of q is real positive.
inline LsqSolution lsq_fit(const HomogeneousSystem& system) {
  const Eigen::Index n = system.n_p + system.n_q;
  if (system.a.rows() != n || system.a.cols() != n || n < 2) {
    throw ParameterError("malformed homogeneous system");
  }
  if (!system.a.allFinite()) throw NumericalError("non-finite system matrix");
  if (system.a.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateError("homogeneous system matrix is identically zero");
  }

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(system.a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Eigen::VectorXcd rho = svd.matrixV().col(n - 1);
  rho.normalize();

  LsqSolution sol;
  sol.smallest_singular_value = sv(n - 1);
  const double scale = std::max(sv(0), 1e-300);
  if (sv(n - 2) - sv(n - 1) <= 64 * Eigen::NumTraits<double>::epsilon() * scale) {
    sol.degenerate_null_space = true;
    sol.warnings.emplace_back(
        "smallest singular value is multiple; using the first null vector");
  }

  Eigen::Index imax = 0;
  rho.tail(system.n_q).cwiseAbs().maxCoeff(&imax);
  const std::complex<double> pivot = rho(system.n_p + imax);
  if (std::abs(pivot) > 0.0) rho *= std::conj(pivot) / std::abs(pivot);

  sol.p = rho.head(system.n_p);
  sol.q = rho.tail(system.n_q);
  return sol;
}

}  // namespace sbra
