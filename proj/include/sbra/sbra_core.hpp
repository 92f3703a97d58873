#pragma once

// Sparse Bayesian rational approximation.
//
// Model: y_k = P(x_k; p) / Q(x_k; q) + e_k with proper complex Gaussian noise
// of precision beta and zero-mean proper complex Gaussian priors
// p_i ~ CN(0, 1/alpha_p_i), q_i ~ CN(0, 1/alpha_q_i). Conditional on q the
// model is linear in p, with design Psi = diag(Psi_Q q)^-1 Psi_P, so the
// posterior of p is Gaussian in closed form. q is set to the MAP estimate of
// the evidence times its prior, and the precisions follow from type-II
// maximum likelihood. Terms whose precision exceeds a threshold are pruned.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sbra/complex_lbfgs.hpp"
#include "sbra/errors.hpp"
#include "sbra/lsq_ra.hpp"
#include "sbra/pce_basis.hpp"
#include "sbra/sampling.hpp"
#include "sbra/surrogate.hpp"

namespace sbra {

using cdouble = std::complex<double>;

enum class NormKind { two, infinity };
enum class InitMode { lsq, random };

inline const char* to_string(NormKind k) {
  return k == NormKind::two ? "two" : "infinity";
}
inline const char* to_string(InitMode m) {
  return m == InitMode::lsq ? "lsq" : "random";
}

inline OptimizerConfig default_q_step_optimizer() {
  OptimizerConfig c;
  c.max_iters = 200;
  c.rel_f_tol = 1e-12;
  return c;
}

struct FitConfig {
  int m_p = 3;
  int m_q = 3;
  double trunc_q_p = 1.0;
  double trunc_q_q = 1.0;
  double alpha_max_p = 1e6;
  double alpha_max_q = 1e6;
  double eps_alpha = 1e-3;
  double eps_beta = 1e-3;
  int max_iter = 200;
  // Initial beta assumes this fraction of ||y||^2 is noise energy. Large
  // fractions let the prior dominate the first q-steps, which then prune
  // denominator terms the data would have kept.
  double initial_noise_fraction = 1e-4;
  NormKind k_norm = NormKind::infinity;
  InitMode init = InitMode::lsq;
  std::uint64_t seed = 0;
  // Gamma hyperprior shape/rate; only c and d enter the beta update.
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  OptimizerConfig optimizer = default_q_step_optimizer();
  bool precondition_q = true;

  void validate() const {
    if (max_iter < 1) throw ParameterError("max_iter must be >= 1");
    if (!(initial_noise_fraction > 0.0)) {
      throw ParameterError("initial_noise_fraction must be positive");
    }
    if (!(alpha_max_p > 0.0) || !(alpha_max_q > 0.0)) {
      throw ParameterError("pruning thresholds must be positive");
    }
    if (!(eps_alpha > 0.0) || !(eps_beta > 0.0)) {
      throw ParameterError("convergence tolerances must be positive");
    }
    if (a < 0.0 || b < 0.0 || c < 0.0 || d < 0.0) {
      throw ParameterError("hyperprior parameters must be non-negative");
    }
    optimizer.validate();
  }
};

// Design matrices restricted to the active terms, plus the responses.
struct RegressionData {
  Eigen::MatrixXd psi_p;
  Eigen::MatrixXd psi_q;
  Eigen::VectorXcd y;

  Eigen::Index size() const { return y.size(); }
};

// Posterior of the numerator coefficients conditional on q, alpha_p, beta.
// Proper complex Gaussian: mean and Hermitian covariance only.
struct NumeratorPosterior {
  Eigen::VectorXcd mu;
  Eigen::MatrixXcd sigma;
  double log_det_sigma = 0.0;
  double y_psi_mu = 0.0;         // y^H Psi mu, real since it equals beta b^H Sigma b
  Eigen::VectorXcd denominator;  // Psi_Q q
  Eigen::MatrixXcd psi;          // diag(Psi_Q q)^-1 Psi_P
};

namespace detail {

// Cholesky of a Hermitian PD matrix; on failure retries with diagonal jitter
// 1e-12 * trace / n, growing tenfold, three times.
inline Eigen::LLT<Eigen::MatrixXcd> hermitian_cholesky(Eigen::MatrixXcd a) {
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const double n = static_cast<double>(a.rows());
  double jitter = 1e-12 * a.diagonal().real().sum() / n;
  for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
    a.diagonal().array() += jitter;
    llt.compute(a);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw NumericalError("Hermitian system is not positive definite");
}

inline void check_denominator(const Eigen::VectorXcd& den) {
  for (Eigen::Index k = 0; k < den.size(); ++k) {
    const double m = std::abs(den(k));
    if (!std::isfinite(m)) throw NumericalError("non-finite denominator value");
    if (m < kPoleThreshold) {
      throw SingularDenominatorError(static_cast<std::size_t>(k));
    }
  }
}

}  // namespace detail

// Sigma = (Lambda_pp + beta Psi^H Psi)^-1, mu = beta Sigma Psi^H y.
inline NumeratorPosterior posterior_numerator(const Eigen::VectorXcd& q,
                                              const Eigen::VectorXd& alpha_p,
                                              double beta,
                                              const Eigen::MatrixXd& psi_p,
                                              const Eigen::MatrixXd& psi_q,
                                              const Eigen::VectorXcd& y) {
  if (psi_p.rows() != y.size() || psi_q.rows() != y.size()) {
    throw ParameterError("design matrices and responses disagree on N");
  }
  if (psi_q.cols() != q.size() || psi_p.cols() != alpha_p.size()) {
    throw ParameterError("coefficient and basis sizes disagree");
  }
  if (!(beta > 0.0) || !((alpha_p.array() > 0.0).all())) {
    throw ParameterError("precisions must be positive");
  }

  NumeratorPosterior post;
  post.denominator = psi_q * q;
  detail::check_denominator(post.denominator);
  post.psi = post.denominator.cwiseInverse().asDiagonal() *
             psi_p.cast<cdouble>();

  const Eigen::Index n_p = psi_p.cols();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n_p, n_p);
  a.selfadjointView<Eigen::Lower>().rankUpdate(post.psi.adjoint(), beta);
  a.diagonal().real() += alpha_p;
  a.triangularView<Eigen::StrictlyUpper>() = a.adjoint();

  const auto llt = detail::hermitian_cholesky(a);
  const Eigen::MatrixXcd& lower = llt.matrixLLT();
  post.log_det_sigma = -2.0 * lower.diagonal().real().array().log().sum();

  post.sigma = llt.solve(Eigen::MatrixXcd::Identity(n_p, n_p));
  post.sigma = 0.5 * (post.sigma + post.sigma.adjoint()).eval();
  const Eigen::VectorXcd b = post.psi.adjoint() * y;
  post.mu = beta * (post.sigma * b);
  post.y_psi_mu = beta * llt.matrixL().solve(b).squaredNorm();

  if (!post.mu.allFinite() || !post.sigma.allFinite() ||
      !std::isfinite(post.log_det_sigma) || !std::isfinite(post.y_psi_mu)) {
    throw NumericalError("non-finite numerator posterior");
  }
  return post;
}

inline NumeratorPosterior posterior_numerator(const Eigen::VectorXcd& q,
                                              const Eigen::VectorXd& alpha_p,
                                              double beta,
                                              const RegressionData& data) {
  return posterior_numerator(q, alpha_p, beta, data.psi_p, data.psi_q, data.y);
}

// Buffers for the conjugate cogradient. Each Xi_i is diagonal,
// Xi_i = diag(Psi_Q(:, i)) * diag(xi), so only length-N vectors are kept.
struct GradientWorkspace {
  Eigen::VectorXcd xi;             // -1 / conj(Psi_Q q)^2
  Eigen::MatrixXcd psi_sigma;      // Psi Sigma
  Eigen::VectorXcd trace_diag;     // diag(beta Psi Sigma Psi_P^T)
  Eigen::VectorXcd misfit_weight;  // conj(Psi_P mu) = (beta y^H Psi Sigma Psi_P^T)^T
  Eigen::VectorXcd residual;       // Psi mu - y
};

struct QObjective {
  double value = 0.0;
  Eigen::VectorXcd cograd;  // empty unless requested
  NumeratorPosterior posterior;
};

// ln det Sigma - beta y^H (y - Psi mu) - q^H Lambda_qq q, and optionally its
// conjugate cogradient
//   g_i = -tr(Gamma_i Psi) - beta y^H Psi Gamma_i (Psi mu - y) - alpha_q_i q_i
// with Gamma_i = beta Sigma Psi_P^T Xi_i.
inline QObjective evaluate_q(const Eigen::VectorXcd& q,
                             const Eigen::VectorXd& alpha_p,
                             const Eigen::VectorXd& alpha_q, double beta,
                             const RegressionData& data, bool with_gradient,
                             GradientWorkspace* workspace = nullptr) {
  if (alpha_q.size() != q.size()) {
    throw ParameterError("alpha_q and q sizes disagree");
  }
  QObjective out;
  out.posterior = posterior_numerator(q, alpha_p, beta, data);
  const auto& post = out.posterior;

  const double yy = data.y.squaredNorm();
  const double prior_q = (alpha_q.array() * q.array().abs2()).sum();
  out.value = post.log_det_sigma - beta * (yy - post.y_psi_mu) - prior_q;
  if (!std::isfinite(out.value)) throw NumericalError("non-finite objective");

  if (with_gradient) {
    GradientWorkspace local;
    GradientWorkspace& ws = workspace ? *workspace : local;
    ws.xi = -post.denominator.conjugate().array().square().inverse();
    ws.psi_sigma.noalias() = post.psi * post.sigma;
    ws.trace_diag =
        beta * (ws.psi_sigma.array() * data.psi_p.cast<cdouble>().array())
                   .rowwise()
                   .sum();
    ws.misfit_weight = (data.psi_p * post.mu).conjugate();
    ws.residual = post.psi * post.mu - data.y;

    const Eigen::VectorXcd per_point =
        ws.xi.array() *
        (-ws.trace_diag.array() -
         beta * ws.misfit_weight.array() * ws.residual.array());
    out.cograd = data.psi_q.transpose().cast<cdouble>() * per_point;
    out.cograd.array() -= alpha_q.array().cast<cdouble>() * q.array();
  }
  return out;
}

inline double log_objective_q(const Eigen::VectorXcd& q,
                              const Eigen::VectorXd& alpha_p,
                              const Eigen::VectorXd& alpha_q, double beta,
                              const RegressionData& data) {
  return evaluate_q(q, alpha_p, alpha_q, beta, data, false).value;
}

inline Eigen::VectorXcd grad_conj_q(const Eigen::VectorXcd& q,
                                    const Eigen::VectorXd& alpha_p,
                                    const Eigen::VectorXd& alpha_q, double beta,
                                    const RegressionData& data,
                                    GradientWorkspace& workspace) {
  return evaluate_q(q, alpha_p, alpha_q, beta, data, true, &workspace).cograd;
}

// Hyperparameter objective: ln det Sigma + N ln beta + ln det Lambda_pp
// + ln det Lambda_qq - beta y^H (y - Psi mu) - q^H Lambda_qq q.
inline double log_evidence(const Eigen::VectorXcd& q,
                           const Eigen::VectorXd& alpha_p,
                           const Eigen::VectorXd& alpha_q, double beta,
                           const RegressionData& data) {
  const double base = log_objective_q(q, alpha_p, alpha_q, beta, data);
  return base + static_cast<double>(data.size()) * std::log(beta) +
         alpha_p.array().log().sum() + alpha_q.array().log().sum();
}

struct MapResult {
  Eigen::VectorXcd q;
  double value_init = 0.0;
  double value = 0.0;
  bool converged = false;
  OptimizerTrace trace;
};

// Gauss-Newton metric of the q-step objective at q: the misfit curvature
// with p eliminated, J^H C^-1 J, where J = diag(Psi mu / Psi_Q q) Psi_Q and
// C = I / beta + Psi Lambda^-1 Psi^H. With Psi = Q R (thin QR),
// C^-1 = beta (I - Q Q^H) + Q (I / beta + R Lambda^-1 R^H)^-1 Q^H, which
// avoids the cancellation in I - beta Psi Sigma Psi^H when beta is large.
inline Eigen::MatrixXcd q_step_metric(const Eigen::VectorXcd& q,
                                      const Eigen::VectorXd& alpha_p,
                                      const Eigen::VectorXd& alpha_q,
                                      double beta, const RegressionData& data) {
  const auto post = posterior_numerator(q, alpha_p, beta, data);
  const Eigen::VectorXcd fitted = post.psi * post.mu;
  const Eigen::MatrixXcd j =
      fitted.cwiseQuotient(post.denominator).asDiagonal() *
      data.psi_q.cast<cdouble>();

  const Eigen::Index n = post.psi.rows();
  const Eigen::Index k = std::min(n, post.psi.cols());
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(post.psi);
  const Eigen::MatrixXcd basis = qr.householderQ() * Eigen::MatrixXcd::Identity(n, k);
  const Eigen::MatrixXcd r =
      qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXcd qj = basis.adjoint() * j;

  Eigen::MatrixXcd inner = r * alpha_p.cwiseInverse().asDiagonal() * r.adjoint();
  inner.diagonal().array() += 1.0 / beta;
  const Eigen::LLT<Eigen::MatrixXcd> llt(inner);
  const Eigen::MatrixXcd t = llt.matrixL().solve(qj);
  Eigen::MatrixXcd m = t.adjoint() * t;
  if (k < n) {
    const Eigen::MatrixXcd off = j - basis * qj;
    m += beta * (off.adjoint() * off);
  }
  m = 0.5 * (m + m.adjoint()).eval();
  // ln det Sigma grows like 2 n_p ln |q| along the scale direction; its
  // curvature there is the only thing holding q when the prior is weak.
  const double log_det_curvature =
      static_cast<double>(post.psi.cols()) / std::max(q.squaredNorm(), 1e-300);
  m.diagonal().real().array() += alpha_q.array() + log_det_curvature;
  return m;
}

namespace detail {

// Lower Cholesky factor of the metric. The misfit part is a difference of
// large terms and can come out slightly indefinite; eigenvalues are then
// floored before factoring.
inline Eigen::MatrixXcd metric_factor(const Eigen::MatrixXcd& m) {
  Eigen::LLT<Eigen::MatrixXcd> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() != Eigen::Success) {
    return Eigen::MatrixXcd::Identity(m.rows(), m.cols());
  }
  const double floor = 1e-10 * std::max(es.eigenvalues().maxCoeff(), 1e-300);
  const Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXcd fixed = es.eigenvectors() * lambda.asDiagonal() *
                           es.eigenvectors().adjoint();
  fixed = 0.5 * (fixed + fixed.adjoint()).eval();
  llt.compute(fixed);
  if (llt.info() != Eigen::Success) {
    return Eigen::MatrixXcd::Identity(m.rows(), m.cols());
  }
  return llt.matrixL();
}

}  // namespace detail

namespace detail {

// One L-BFGS run of the q-step, in coordinates z = L^H q when preconditioned.
inline MapResult map_q_once(const Eigen::VectorXcd& q_init,
                            const Eigen::VectorXd& alpha_p,
                            const Eigen::VectorXd& alpha_q, double beta,
                            const RegressionData& data,
                            const OptimizerConfig& optimizer, bool precondition) {
  const Eigen::Index n = q_init.size();
  Eigen::MatrixXcd lower = Eigen::MatrixXcd::Identity(n, n);
  if (precondition) {
    lower = metric_factor(q_step_metric(q_init, alpha_p, alpha_q, beta, data));
  }
  const auto l_view = lower.triangularView<Eigen::Lower>();
  auto to_q = [&](const Eigen::VectorXcd& z) -> Eigen::VectorXcd {
    return l_view.adjoint().solve(z);
  };

  GradientWorkspace ws;
  bool first = true;
  // dq/dz = L^-H, so the cogradient in z is L^-1 times the one in q.
  auto value_and_cograd = [&](const Eigen::VectorXcd& z,
                              Eigen::VectorXcd& g) -> double {
    const Eigen::VectorXcd q = to_q(z);
    if (first) {
      first = false;
      auto ev = evaluate_q(q, alpha_p, alpha_q, beta, data, true, &ws);
      g = l_view.solve(ev.cograd);
      return ev.value;
    }
    try {
      auto ev = evaluate_q(q, alpha_p, alpha_q, beta, data, true, &ws);
      g = l_view.solve(ev.cograd);
      return ev.value;
    } catch (const NumericalError&) {
      g.setZero(n);
      return -std::numeric_limits<double>::infinity();
    }
  };
  const Eigen::VectorXcd z0 = l_view.adjoint() * q_init;
  auto res = maximize(value_and_cograd, z0, optimizer);

  MapResult out;
  out.value_init = res.trace.values.front();
  out.value = res.value;
  out.q = to_q(res.q);
  out.converged = res.converged();
  out.trace = std::move(res.trace);
  return out;
}

inline void append_run(MapResult& total, MapResult&& run) {
  total.q = std::move(run.q);
  total.value = run.value;
  total.converged = run.converged;
  auto& t = total.trace;
  t.status = run.trace.status;
  t.iterations += run.trace.iterations;
  t.evaluations += run.trace.evaluations;
  t.grad_norm = run.trace.grad_norm;
  // The restart's first value repeats the previous end point.
  for (std::size_t i = 1; i < run.trace.values.size(); ++i) {
    t.values.push_back(std::max(run.trace.values[i], t.values.back()));
  }
  t.steps.insert(t.steps.end(), run.trace.steps.begin(), run.trace.steps.end());
}

inline constexpr int kMetricRefreshes = 2;
inline constexpr double kMetricStaleGain = 1e-2;

}  // namespace detail

// MAP estimate of q conditional on the hyperparameters. Points where the
// posterior cannot be formed (a pole on a data point) are infeasible for the
// line search. With `precondition`, the search runs in coordinates
// z = L^H q where L L^H is the metric above at the starting point. The metric
// is only a local model, so a run that stops short of convergence after a
// large gain is restarted with the metric refreshed at its end
// point, and finally polished without preconditioning.
inline MapResult map_q(const Eigen::VectorXcd& q_init,
                       const Eigen::VectorXd& alpha_p,
                       const Eigen::VectorXd& alpha_q, double beta,
                       const RegressionData& data,
                       const OptimizerConfig& optimizer = {},
                       bool precondition = true) {
  if (q_init.size() == 0 || q_init.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateError("initial denominator coefficients are zero");
  }
  auto out = detail::map_q_once(q_init, alpha_p, alpha_q, beta, data, optimizer,
                                precondition);
  if (!precondition) return out;
  double start_value = out.value_init;
  for (int k = 0; k <= detail::kMetricRefreshes && !out.converged; ++k) {
    // The metric is stale when the last run gained a lot relative to the
    // objective's scale; small gains mean a flat valley, not a bad model.
    const double gain = out.value - start_value;
    if (!(gain > detail::kMetricStaleGain * std::max(1.0, std::abs(out.value)))) break;
    start_value = out.value;
    const bool last = k == detail::kMetricRefreshes;
    auto run = detail::map_q_once(out.q, alpha_p, alpha_q, beta, data, optimizer, !last);
    if (!(run.value > out.value)) break;
    detail::append_run(out, std::move(run));
  }
  return out;
}

inline Eigen::VectorXcd normalize_q(const Eigen::VectorXcd& q, NormKind k) {
  const double norm = k == NormKind::two ? q.norm()
                      : q.size() == 0    ? 0.0
                                         : q.cwiseAbs().maxCoeff();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateError("cannot normalize a zero denominator vector");
  }
  return q / norm;
}

struct SbraState {
  // Positions of the active terms in the full candidate bases, ascending.
  std::vector<std::size_t> active_p;
  std::vector<std::size_t> active_q;
  Eigen::VectorXd alpha_p;
  Eigen::VectorXd alpha_q;
  double beta = 1.0;
  Eigen::VectorXcd mu;
  Eigen::MatrixXcd sigma;
  Eigen::VectorXcd q;
  int iteration = 0;
  double last_delta_log_alpha = std::numeric_limits<double>::infinity();
  double last_delta_log_beta = std::numeric_limits<double>::infinity();
  // Full-basis position of the constant denominator term; never pruned.
  std::size_t protected_q = 0;
  // Positions (in the active sets) whose precision hit the saturation cap.
  std::vector<std::size_t> saturated_p;
  std::vector<std::size_t> saturated_q;
  bool beta_saturated = false;
};

// Saturation caps: 1e12 above the pruning threshold; beta is capped at
// 1e12 * N / ||y||^2, i.e. a noise power 1e-12 of the mean signal power.
inline constexpr double kAlphaCapFactor = 1e12;
inline constexpr double kBetaCapRelative = 1e12;

inline double beta_cap(const RegressionData& data) {
  return kBetaCapRelative * static_cast<double>(data.size()) /
         std::max(data.y.squaredNorm(), 1e-300);
}

// alpha_p_i <- 1 / (Sigma_ii + |mu_i|^2), alpha_q_i <- 1 / |q_i|^2,
// beta <- (N + c) / (||y - Psi mu||^2 + tr(Sigma Psi^H Psi) + d).
inline SbraState update_hyperparameters(const SbraState& state,
                                        const RegressionData& data,
                                        const FitConfig& config) {
  SbraState next = state;
  next.saturated_p.clear();
  next.saturated_q.clear();
  next.beta_saturated = false;

  const double cap_p = config.alpha_max_p * kAlphaCapFactor;
  const double cap_q = config.alpha_max_q * kAlphaCapFactor;
  for (Eigen::Index i = 0; i < state.mu.size(); ++i) {
    const double denom = state.sigma(i, i).real() + std::norm(state.mu(i));
    const double v = denom > 0.0 ? 1.0 / denom : cap_p;
    next.alpha_p(i) = std::min(v, cap_p);
    if (!(v < cap_p)) next.saturated_p.push_back(static_cast<std::size_t>(i));
  }
  for (Eigen::Index i = 0; i < state.q.size(); ++i) {
    const double denom = std::norm(state.q(i));
    const double v = denom > 0.0 ? 1.0 / denom : cap_q;
    next.alpha_q(i) = std::min(v, cap_q);
    if (!(v < cap_q)) next.saturated_q.push_back(static_cast<std::size_t>(i));
  }

  const Eigen::VectorXcd den = data.psi_q * state.q;
  detail::check_denominator(den);
  const Eigen::MatrixXcd psi =
      den.cwiseInverse().asDiagonal() * data.psi_p.cast<cdouble>();
  const double misfit = (data.y - psi * state.mu).squaredNorm();
  // tr(Sigma Psi^H Psi) = sum_k (Psi Sigma Psi^H)_kk
  const double spread =
      ((psi * state.sigma).array() * psi.conjugate().array()).real().sum();
  const double denom = misfit + spread + config.d;
  const double bcap = beta_cap(data);
  const double bv = denom > 0.0
                        ? (static_cast<double>(data.size()) + config.c) / denom
                        : bcap;
  next.beta = std::min(bv, bcap);
  next.beta_saturated = !(bv < bcap);
  if (!std::isfinite(next.beta) || !next.alpha_p.allFinite() ||
      !next.alpha_q.allFinite()) {
    throw NumericalError("non-finite hyperparameter update");
  }
  return next;
}

namespace detail {

template <class Keep>
std::vector<Eigen::Index> kept_positions(Eigen::Index n, Keep&& keep) {
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (keep(i)) kept.push_back(i);
  }
  return kept;
}

inline Eigen::VectorXd take(const Eigen::VectorXd& v,
                            const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

inline Eigen::VectorXcd take(const Eigen::VectorXcd& v,
                             const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

inline std::vector<std::size_t> take(const std::vector<std::size_t>& v,
                                     const std::vector<Eigen::Index>& idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace detail

// Drops numerator terms with alpha_p above the threshold.
inline SbraState prune_numerator(const SbraState& state,
                                 const FitConfig& config) {
  const auto kept = detail::kept_positions(
      state.alpha_p.size(),
      [&](Eigen::Index i) { return !(state.alpha_p(i) > config.alpha_max_p); });
  if (kept.empty()) {
    throw AllPrunedError(
        "pruning would remove every numerator term; lower alpha_max_p");
  }
  if (static_cast<Eigen::Index>(kept.size()) == state.alpha_p.size()) {
    return state;
  }
  SbraState next = state;
  next.active_p = detail::take(state.active_p, kept);
  next.alpha_p = detail::take(state.alpha_p, kept);
  if (state.mu.size() == state.alpha_p.size()) {
    next.mu = detail::take(state.mu, kept);
  }
  if (state.sigma.rows() == state.alpha_p.size()) {
    const auto k = static_cast<Eigen::Index>(kept.size());
    next.sigma.resize(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < k; ++c) {
        next.sigma(r, c) = state.sigma(kept[static_cast<std::size_t>(r)],
                                       kept[static_cast<std::size_t>(c)]);
      }
    }
  }
  next.saturated_p.clear();
  return next;
}

// Drops denominator terms with alpha_q above the threshold, keeping the
// constant term.
inline SbraState prune_denominator(const SbraState& state,
                                   const FitConfig& config) {
  const auto kept = detail::kept_positions(
      state.alpha_q.size(), [&](Eigen::Index i) {
        return !(state.alpha_q(i) > config.alpha_max_q) ||
               state.active_q[static_cast<std::size_t>(i)] == state.protected_q;
      });
  if (kept.empty()) {
    throw AllPrunedError(
        "pruning would remove every denominator term; lower alpha_max_q");
  }
  if (static_cast<Eigen::Index>(kept.size()) == state.alpha_q.size()) {
    return state;
  }
  SbraState next = state;
  next.active_q = detail::take(state.active_q, kept);
  next.alpha_q = detail::take(state.alpha_q, kept);
  next.q = detail::take(state.q, kept);
  next.saturated_q.clear();
  return next;
}

inline SbraState prune(const SbraState& state, const FitConfig& config) {
  return prune_denominator(prune_numerator(state, config), config);
}

// Columns of the full design matrices selected by the active sets.
inline RegressionData active_data(const RegressionData& full,
                                  const SbraState& state) {
  RegressionData out;
  out.y = full.y;
  out.psi_p.resize(full.psi_p.rows(),
                   static_cast<Eigen::Index>(state.active_p.size()));
  for (std::size_t j = 0; j < state.active_p.size(); ++j) {
    out.psi_p.col(static_cast<Eigen::Index>(j)) =
        full.psi_p.col(static_cast<Eigen::Index>(state.active_p[j]));
  }
  out.psi_q.resize(full.psi_q.rows(),
                   static_cast<Eigen::Index>(state.active_q.size()));
  for (std::size_t j = 0; j < state.active_q.size(); ++j) {
    out.psi_q.col(static_cast<Eigen::Index>(j)) =
        full.psi_q.col(static_cast<Eigen::Index>(state.active_q[j]));
  }
  return out;
}

struct IterationRecord {
  int iteration = 0;
  std::size_t n_p = 0;
  std::size_t n_q = 0;
  double objective = 0.0;  // q-step objective at the normalized MAP point
  double delta_log_alpha = 0.0;
  double delta_log_beta = 0.0;
  double beta = 0.0;
  double wall_ms = 0.0;
  int optimizer_iterations = 0;
  OptimizerStatus optimizer_status = OptimizerStatus::converged;
};

struct FitReport {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  std::size_t full_n_p = 0;
  std::size_t full_n_q = 0;
  std::vector<std::string> warnings;
};

struct FitResult {
  RationalSurrogate surrogate;
  SbraState state;
  FitReport report;
};

namespace detail {

// Largest |log a - log b| over terms active in both iterations.
inline double max_delta_log(const std::vector<std::size_t>& prev_active,
                            const Eigen::VectorXd& prev,
                            const std::vector<std::size_t>& cur_active,
                            const Eigen::VectorXd& cur) {
  double m = 0.0;
  std::size_t i = 0;
  for (std::size_t j = 0; j < cur_active.size(); ++j) {
    while (i < prev_active.size() && prev_active[i] < cur_active[j]) ++i;
    if (i < prev_active.size() && prev_active[i] == cur_active[j]) {
      m = std::max(m, std::abs(std::log(cur(static_cast<Eigen::Index>(j))) -
                               std::log(prev(static_cast<Eigen::Index>(i)))));
    }
  }
  return m;
}

template <class Fn>
auto with_iteration_context(int iteration, Fn&& fn) -> decltype(fn()) {
  const std::string where = "iteration " + std::to_string(iteration) + ": ";
  try {
    return fn();
  } catch (const SingularDenominatorError& e) {
    throw SingularDenominatorError(e.point_index());
  } catch (const AllPrunedError& e) {
    throw AllPrunedError(where + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(where + e.what());
  } catch (const DegenerateError& e) {
    throw DegenerateError(where + e.what());
  }
}

inline std::vector<std::size_t> iota_positions(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace detail

// Initial coefficients: least-squares rational fit or a proper standard
// complex normal draw.
inline LsqSolution initial_coefficients(const RegressionData& full,
                                        const FitConfig& config) {
  if (config.init == InitMode::lsq) {
    return lsq_fit(build_system(full.psi_p, full.psi_q, full.y));
  }
  CounterRng rng(config.seed, 0x5eed1a17ULL);
  LsqSolution sol;
  sol.p = proper_complex_normal(full.psi_p.cols(), rng);
  sol.q = proper_complex_normal(full.psi_q.cols(), rng);
  return sol;
}

// Runs the iterative scheme on precomputed full design matrices.
inline FitResult fit(const BasisSpec& basis_p, const BasisSpec& basis_q,
                     const RegressionData& full, const FitConfig& config) {
  using clock = std::chrono::steady_clock;
  config.validate();
  const Eigen::Index n_points = full.size();
  if (n_points < 1) throw ParameterError("fit needs at least one data point");
  if (full.psi_p.cols() != static_cast<Eigen::Index>(basis_p.size()) ||
      full.psi_q.cols() != static_cast<Eigen::Index>(basis_q.size())) {
    throw ParameterError("design matrices do not match the bases");
  }
  const double yy = full.y.squaredNorm();
  if (!(yy > 0.0)) throw DegenerateError("responses are identically zero");

  FitResult result;
  auto& report = result.report;
  report.full_n_p = basis_p.size();
  report.full_n_q = basis_q.size();

  SbraState state;
  state.active_p = detail::iota_positions(basis_p.size());
  state.active_q = detail::iota_positions(basis_q.size());
  state.protected_q = 0;
  for (std::size_t i = 0; i < basis_q.size(); ++i) {
    if (total_degree(basis_q[i]) == 0) {
      state.protected_q = i;
      break;
    }
  }
  state.alpha_p = Eigen::VectorXd::Ones(full.psi_p.cols());
  state.alpha_q = Eigen::VectorXd::Ones(full.psi_q.cols());
  state.beta =
      static_cast<double>(n_points) / (config.initial_noise_fraction * yy);

  {
    auto init = detail::with_iteration_context(
        0, [&] { return initial_coefficients(full, config); });
    for (auto& w : init.warnings) report.warnings.push_back("init: " + w);
    state.q = normalize_q(init.q, config.k_norm);
  }

  for (int it = 1; it <= config.max_iter; ++it) {
    const auto t0 = clock::now();
    const SbraState prev = state;
    IterationRecord rec;
    rec.iteration = it;

    detail::with_iteration_context(it, [&] {
      if (it > 1) state = prune_numerator(state, config);
      auto data = active_data(full, state);

      auto map = map_q(state.q, state.alpha_p, state.alpha_q, state.beta, data,
                       config.optimizer, config.precondition_q);
      state.q = normalize_q(map.q, config.k_norm);
      rec.optimizer_iterations = map.trace.iterations;
      rec.optimizer_status = map.trace.status;

      const auto n_q_before = state.active_q.size();
      state = prune_denominator(state, config);
      if (state.active_q.size() != n_q_before) {
        data = active_data(full, state);
        state.q = normalize_q(state.q, config.k_norm);
      }

      auto ev = evaluate_q(state.q, state.alpha_p, state.alpha_q, state.beta,
                           data, false);
      rec.objective = ev.value;
      state.mu = std::move(ev.posterior.mu);
      state.sigma = std::move(ev.posterior.sigma);
      state = update_hyperparameters(state, data, config);
    });

    state.iteration = it;
    const double dla = std::max(
        detail::max_delta_log(prev.active_p, prev.alpha_p, state.active_p,
                              state.alpha_p),
        detail::max_delta_log(prev.active_q, prev.alpha_q, state.active_q,
                              state.alpha_q));
    const double dlb = std::abs(std::log(state.beta) - std::log(prev.beta));
    state.last_delta_log_alpha = dla;
    state.last_delta_log_beta = dlb;

    rec.n_p = state.active_p.size();
    rec.n_q = state.active_q.size();
    rec.delta_log_alpha = dla;
    rec.delta_log_beta = dlb;
    rec.beta = state.beta;
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    report.iterations.push_back(rec);

    if (dla <= config.eps_alpha && dlb <= config.eps_beta) {
      report.converged = true;
      break;
    }
  }
  if (state.beta_saturated) {
    report.warnings.push_back("noise precision reached its saturation cap");
  }

  result.surrogate.basis_p = basis_p.subset(state.active_p);
  result.surrogate.basis_q = basis_q.subset(state.active_q);
  result.surrogate.p = state.mu;
  result.surrogate.q = state.q;
  result.state = std::move(state);
  return result;
}

inline FitResult fit(const Dataset& data, const FitConfig& config) {
  config.validate();
  const auto d = static_cast<int>(data.dim());
  if (data.size() < 1) throw ParameterError("dataset is empty");
  if (data.responses.size() != data.size()) {
    throw ParameterError("dataset inputs and responses disagree on N");
  }
  const auto basis_p = generate_indices(d, config.m_p, config.trunc_q_p);
  const auto basis_q = generate_indices(d, config.m_q, config.trunc_q_q);
  RegressionData full;
  full.psi_p = design_matrix(basis_p, data.inputs_std);
  full.psi_q = design_matrix(basis_q, data.inputs_std);
  full.y = data.responses;
  return fit(basis_p, basis_q, full, config);
}

// Least-squares baseline packaged as a surrogate on the full bases.
inline RationalSurrogate lsq_surrogate(const Dataset& data, int m_p,
                                       double trunc_q_p, int m_q,
                                       double trunc_q_q) {
  const auto d = static_cast<int>(data.dim());
  RationalSurrogate s;
  s.basis_p = generate_indices(d, m_p, trunc_q_p);
  s.basis_q = generate_indices(d, m_q, trunc_q_q);
  const auto sol = lsq_fit(build_system(design_matrix(s.basis_p, data.inputs_std),
                                        design_matrix(s.basis_q, data.inputs_std),
                                        data.responses));
  s.p = sol.p;
  s.q = sol.q;
  return s;
}

}  // namespace sbra
