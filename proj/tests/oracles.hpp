#pragma once

// Independent reference computations for the test suite. Nothing here calls
// into the library's numerical kernels.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

// Gauss-Hermite rule for the standard normal weight (Golub-Welsch on the
// Jacobi matrix of the probabilist Hermite recurrence).
struct Quadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

inline Quadrature gauss_hermite(int n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    j(k, k - 1) = j(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  Quadrature q;
  q.nodes = es.eigenvalues();
  q.weights = es.eigenvectors().row(0).transpose().array().square();
  return q;
}

// Raw probabilist Hermite He_k(x) divided by sqrt(k!) computed in log space.
inline double hermite_raw_normalized(int k, double x) {
  double h0 = 1.0;
  if (k == 0) return h0;
  double h1 = x;
  for (int j = 1; j < k; ++j) {
    const double h2 = x * h1 - j * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1 / std::exp(0.5 * std::lgamma(k + 1.0));
}

// All multi-indices with total degree <= m (brute-force odometer), filtered
// by the hyperbolic rule.
inline std::vector<std::vector<int>> brute_force_indices(int d, int m, double q) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(static_cast<std::size_t>(d), 0);
  while (true) {
    int sum = 0;
    double s = 0.0;
    for (int v : a) {
      sum += v;
      if (v > 0) s += std::pow(static_cast<double>(v), q);
    }
    if (sum <= m && std::pow(s, 1.0 / q) <= m * (1.0 + 1e-12)) out.push_back(a);
    int pos = 0;
    while (pos < d && ++a[static_cast<std::size_t>(pos)] > m) {
      a[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == d) break;
  }
  return out;
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Entry-by-entry tensor-product design matrix.
inline Eigen::MatrixXd naive_design(const std::vector<std::vector<int>>& idx,
                                    const Eigen::MatrixXd& x) {
  Eigen::MatrixXd m(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      double v = 1.0;
      for (std::size_t k = 0; k < idx[j].size(); ++k) {
        v *= hermite_raw_normalized(idx[j][k], x(i, static_cast<Eigen::Index>(k)));
      }
      m(i, static_cast<Eigen::Index>(j)) = v;
    }
  }
  return m;
}

inline Eigen::VectorXcd naive_rational(const Eigen::MatrixXd& psi_p,
                                       const Eigen::MatrixXd& psi_q,
                                       const Eigen::VectorXcd& p,
                                       const Eigen::VectorXcd& q) {
  Eigen::VectorXcd r(psi_p.rows());
  for (Eigen::Index i = 0; i < psi_p.rows(); ++i) {
    cd num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < psi_p.cols(); ++j) num += psi_p(i, j) * p(j);
    for (Eigen::Index j = 0; j < psi_q.cols(); ++j) den += psi_q(i, j) * q(j);
    r(i) = num / den;
  }
  return r;
}

// Complex Bayesian linear regression y = Phi p + e, p ~ CN(0, diag(1/alpha)),
// e ~ CN(0, I/beta), solved through its real composite form. Returns the
// complex posterior mean and covariance plus the real covariance blocks so
// properness can be inspected.
struct RealCompositePosterior {
  Eigen::VectorXcd mu;
  Eigen::MatrixXcd sigma;
  Eigen::MatrixXd cov_real;  // 2n x 2n covariance of [Re p; Im p]
};

inline RealCompositePosterior regression_posterior(const Eigen::MatrixXcd& phi,
                                                   const Eigen::VectorXd& alpha,
                                                   double beta,
                                                   const Eigen::VectorXcd& y) {
  const Eigen::Index n = phi.cols();
  const Eigen::Index m = phi.rows();
  Eigen::MatrixXd a(2 * m, 2 * n);
  a << phi.real(), -phi.imag(), phi.imag(), phi.real();
  Eigen::VectorXd b(2 * m);
  b << y.real(), y.imag();
  // Each real component has variance half the complex one.
  Eigen::VectorXd prior_prec(2 * n);
  prior_prec << 2.0 * alpha, 2.0 * alpha;
  const double noise_prec = 2.0 * beta;
  Eigen::MatrixXd prec = noise_prec * a.transpose() * a;
  prec.diagonal() += prior_prec;
  RealCompositePosterior out;
  out.cov_real = prec.inverse();
  const Eigen::VectorXd mean = out.cov_real * (noise_prec * a.transpose() * b);
  out.mu = mean.head(n).cast<cd>() + cd(0, 1) * mean.tail(n).cast<cd>();
  const Eigen::MatrixXd c11 = out.cov_real.topLeftCorner(n, n);
  const Eigen::MatrixXd c21 = out.cov_real.bottomLeftCorner(n, n);
  out.sigma = 2.0 * (c11.cast<cd>() + cd(0, 1) * c21.cast<cd>());
  return out;
}

// Conjugate cogradient of the q-step objective from the dense per-coefficient
// matrices: Xi_i = dPsi^H / d conj(q_i) factor, Gamma_i = beta Sigma Psi_P^T Xi_i,
//   g_i = -tr(Gamma_i Psi) - beta y^H Psi Gamma_i (Psi mu - y) - alpha_q_i q_i.
inline Eigen::VectorXcd dense_cogradient(const Eigen::MatrixXd& psi_p,
                                         const Eigen::MatrixXd& psi_q,
                                         const Eigen::VectorXcd& y,
                                         const Eigen::VectorXcd& q,
                                         const Eigen::VectorXd& alpha_p,
                                         const Eigen::VectorXd& alpha_q,
                                         double beta) {
  const Eigen::Index n = y.size();
  const Eigen::VectorXcd den = psi_q.cast<cd>() * q;
  Eigen::MatrixXcd psi(n, psi_p.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    psi.row(k) = psi_p.row(k).cast<cd>() / den(k);
  }
  Eigen::MatrixXcd a = beta * psi.adjoint() * psi;
  a.diagonal() += alpha_p.cast<cd>();
  const Eigen::MatrixXcd sigma = a.inverse();
  const Eigen::VectorXcd mu = beta * sigma * psi.adjoint() * y;
  const Eigen::VectorXcd r = psi * mu - y;

  Eigen::VectorXcd g(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    Eigen::MatrixXcd xi = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      xi(k, k) = -psi_q(k, i) / std::pow(std::conj(den(k)), 2);
    }
    const Eigen::MatrixXcd gamma = beta * sigma * psi_p.transpose().cast<cd>() * xi;
    const cd tr = (gamma * psi).trace();
    const cd misfit = (y.adjoint() * psi * gamma * r)(0, 0);
    g(i) = -tr - beta * misfit - alpha_q(i) * q(i);
  }
  return g;
}

// Direct evaluation of ln det Sigma - beta y^H (y - Psi mu) - sum alpha_q |q|^2.
inline double dense_objective(const Eigen::MatrixXd& psi_p,
                              const Eigen::MatrixXd& psi_q,
                              const Eigen::VectorXcd& y,
                              const Eigen::VectorXcd& q,
                              const Eigen::VectorXd& alpha_p,
                              const Eigen::VectorXd& alpha_q, double beta) {
  const Eigen::VectorXcd den = psi_q.cast<cd>() * q;
  Eigen::MatrixXcd psi(y.size(), psi_p.cols());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    psi.row(k) = psi_p.row(k).cast<cd>() / den(k);
  }
  Eigen::MatrixXcd a = beta * psi.adjoint() * psi;
  a.diagonal() += alpha_p.cast<cd>();
  const Eigen::MatrixXcd sigma = a.inverse();
  const Eigen::VectorXcd mu = beta * sigma * psi.adjoint() * y;
  const double log_det_sigma = -std::log(a.determinant().real());
  const cd misfit = y.dot(y - psi * mu);
  double prior = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) prior += alpha_q(i) * std::norm(q(i));
  return log_det_sigma - beta * misfit.real() - prior;
}

// Central finite differences of a real function of a complex vector,
// returned as the conjugate cogradient (d/dRe + i d/dIm) / 2.
inline Eigen::VectorXcd fd_cogradient(
    const std::function<double(const Eigen::VectorXcd&)>& f,
    const Eigen::VectorXcd& q, double h) {
  Eigen::VectorXcd g(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    Eigen::VectorXcd qp = q, qm = q;
    qp(i) += h;
    qm(i) -= h;
    const double d_re = (f(qp) - f(qm)) / (2 * h);
    qp = q;
    qm = q;
    qp(i) += cd(0, h);
    qm(i) -= cd(0, h);
    const double d_im = (f(qp) - f(qm)) / (2 * h);
    g(i) = 0.5 * cd(d_re, d_im);
  }
  return g;
}

inline double naive_relative_error(const Eigen::VectorXcd& pred,
                                   const Eigen::VectorXcd& truth) {
  const auto n = static_cast<double>(truth.size());
  double err = 0.0;
  cd mean = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    err += std::norm(pred(i) - truth(i));
    mean += truth(i);
  }
  err /= n;
  mean /= n;
  double var = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) var += std::norm(truth(i) - mean);
  var /= (n - 1.0);
  return err / var;
}

inline Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols,
                                     std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

inline Eigen::VectorXcd complex_normal(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cd(nd(rng), nd(rng)) / std::sqrt(2.0);
  return v;
}

}  // namespace oracle
