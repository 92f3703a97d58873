#pragma once

// L-BFGS ascent for real-valued functions of complex vectors.
//
// A real objective f(q) is handled through the isomorphism q <-> [Re q; Im q].
// With g = df/d(conj q) (the conjugate cogradient), the real gradient is
// [2 Re g; 2 Im g]. The quasi-Newton core is generic over the vector type and
// its inner product so the same algorithm can run on either representation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sbra/errors.hpp"

namespace sbra {

struct OptimizerConfig {
  int memory = 10;
  int max_iters = 500;
  double grad_tol = 1e-8;  // on the infinity norm of the real gradient
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_ls_steps = 20;
  // Stop once an accepted step improves the objective by less than
  // rel_f_tol * max(1, |f|). Zero disables the test.
  double rel_f_tol = 0.0;

  void validate() const {
    if (memory < 1) throw ParameterError("L-BFGS memory must be >= 1");
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) {
      throw ParameterError("Wolfe constants need 0 < c1 < c2 < 1");
    }
    if (max_iters < 0 || max_ls_steps < 1) {
      throw ParameterError("iteration limits must be positive");
    }
  }
};

enum class OptimizerStatus {
  converged,
  max_iterations,
  line_search_failed,
  stalled,
};

inline const char* to_string(OptimizerStatus s) {
  switch (s) {
    case OptimizerStatus::converged: return "converged";
    case OptimizerStatus::max_iterations: return "max_iterations";
    case OptimizerStatus::line_search_failed: return "line_search_failed";
    case OptimizerStatus::stalled: return "stalled";
  }
  return "unknown";
}

// One accepted step, in the minimization frame phi(t) = F(x + t d).
struct LineSearchRecord {
  double step;
  double value0;
  double slope0;
  double value;
  double slope;
};

struct OptimizerTrace {
  OptimizerStatus status = OptimizerStatus::max_iterations;
  int iterations = 0;
  int evaluations = 0;
  double grad_norm = std::numeric_limits<double>::infinity();
  // Objective after each accepted iterate, starting with the initial point.
  std::vector<double> values;
  std::vector<LineSearchRecord> steps;
};

// Real Euclidean space.
struct RealSpace {
  using Vector = Eigen::VectorXd;
  static double dot(const Vector& a, const Vector& b) { return a.dot(b); }
  static double norm_inf(const Vector& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
  }
};

// C^n with the real inner product <u, v> = Re(u^H v).
struct ComplexSpace {
  using Vector = Eigen::VectorXcd;
  static double dot(const Vector& a, const Vector& b) {
    return std::real(a.dot(b));
  }
  static double norm_inf(const Vector& a) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      m = std::max({m, std::abs(a(i).real()), std::abs(a(i).imag())});
    }
    return m;
  }
};

template <class Vector>
struct MinimizeResult {
  Vector x;
  double value;
  Vector gradient;
  OptimizerTrace trace;
};

namespace detail {

// Minimizer of the cubic through (a, fa, ga) and (b, fb, gb), clamped to the
// inner 80% of the interval; bisection when the cubic is unusable.
inline double cubic_step(double a, double fa, double ga, double b, double fb,
                         double gb) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double margin = 0.1 * (hi - lo);
  double t = 0.5 * (a + b);
  if (std::isfinite(fb) && std::isfinite(gb)) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    if (disc >= 0.0) {
      const double d2 = std::copysign(std::sqrt(disc), b - a);
      const double denom = gb - ga + 2.0 * d2;
      if (denom != 0.0) {
        const double c = b - (b - a) * (gb + d2 - d1) / denom;
        if (std::isfinite(c)) t = c;
      }
    }
  }
  return std::clamp(t, lo + margin, hi - margin);
}

}  // namespace detail

// Minimizes F with L-BFGS (two-loop recursion) and a strong Wolfe line
// search, falling back to the approximate Wolfe test once changes in F are
// at rounding level. fg(x, grad) returns F(x) and writes the gradient; a non-finite
// return value marks x as infeasible for the line search.
template <class Space, class FG>
MinimizeResult<typename Space::Vector> lbfgs_minimize(
    FG&& fg, typename Space::Vector x0, const OptimizerConfig& config) {
  using Vector = typename Space::Vector;
  config.validate();

  MinimizeResult<Vector> res;
  auto& trace = res.trace;
  Vector x = std::move(x0);
  Vector g(x.size());
  double f = fg(x, g);
  ++trace.evaluations;
  if (!std::isfinite(f) || !g.allFinite()) {
    throw NumericalError("objective is not finite at the initial point");
  }
  trace.values.push_back(f);
  trace.grad_norm = Space::norm_inf(g);

  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  std::deque<double> rho_hist;
  Vector d(x.size());
  Vector x_trial(x.size());
  Vector g_trial(x.size());
  std::vector<double> alpha_buf;

  trace.status = OptimizerStatus::max_iterations;
  bool retried_steepest = false;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    if (trace.grad_norm <= config.grad_tol) {
      trace.status = OptimizerStatus::converged;
      break;
    }

    // Two-loop recursion: d = -H g.
    d = -g;
    const std::size_t m = s_hist.size();
    alpha_buf.assign(m, 0.0);
    for (std::size_t k = m; k-- > 0;) {
      alpha_buf[k] = rho_hist[k] * Space::dot(s_hist[k], d);
      d -= alpha_buf[k] * y_hist[k];
    }
    if (m > 0) {
      const double gamma = Space::dot(s_hist.back(), y_hist.back()) /
                           Space::dot(y_hist.back(), y_hist.back());
      d *= gamma;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * Space::dot(y_hist[k], d);
      d += (alpha_buf[k] - beta) * s_hist[k];
    }

    double slope0 = Space::dot(g, d);
    if (!(slope0 < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g;
      slope0 = Space::dot(g, d);
      if (!(slope0 < 0.0)) {
        trace.status = OptimizerStatus::converged;
        break;
      }
    }

    double t = 1.0;
    if (s_hist.empty()) {
      t = std::min(1.0, 1.0 / std::sqrt(Space::dot(d, d)));
    }

    // Strong Wolfe line search (bracketing + zoom).
    const double f0 = f;
    int evals = 0;
    bool accepted = false;
    double f_new = f0;
    double slope_new = slope0;

    auto evaluate = [&](double step, double& value, double& slope) {
      x_trial = x + step * d;
      value = fg(x_trial, g_trial);
      ++evals;
      ++trace.evaluations;
      if (!std::isfinite(value) || !g_trial.allFinite()) {
        value = std::numeric_limits<double>::infinity();
        slope = std::numeric_limits<double>::quiet_NaN();
      } else {
        slope = Space::dot(g_trial, d);
      }
    };
    // Near the optimum the Armijo test drowns in rounding of F; the
    // derivative form of the same test (approximate Wolfe) still resolves
    // progress, and F must at least not increase.
    const double f_noise = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f0);
    auto sufficient = [&](double step, double value) {
      return value <= f0 + config.c1 * step * slope0;
    };
    auto approx_sufficient = [&](double value, double slope) {
      return value <= f0 && f0 - value <= f_noise && slope <= (2.0 * config.c1 - 1.0) * slope0;
    };
    auto curvature = [&](double slope) {
      return std::abs(slope) <= -config.c2 * slope0;
    };

    auto zoom = [&](double lo, double f_lo, double s_lo, double hi,
                    double f_hi, double s_hi) {
      while (evals < config.max_ls_steps) {
        const double tj = detail::cubic_step(lo, f_lo, s_lo, hi, f_hi, s_hi);
        double fj = 0.0;
        double sj = 0.0;
        evaluate(tj, fj, sj);
        if (approx_sufficient(fj, sj) && curvature(sj)) {
          t = tj;
          f_new = fj;
          slope_new = sj;
          return true;
        }
        if (!sufficient(tj, fj) || fj >= f_lo) {
          hi = tj;
          f_hi = fj;
          s_hi = sj;
        } else {
          if (curvature(sj)) {
            t = tj;
            f_new = fj;
            slope_new = sj;
            return true;
          }
          if (sj * (hi - lo) >= 0.0) {
            hi = lo;
            f_hi = f_lo;
            s_hi = s_lo;
          }
          lo = tj;
          f_lo = fj;
          s_lo = sj;
        }
        if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
      }
      return false;
    };

    double t_prev = 0.0;
    double f_prev = f0;
    double s_prev = slope0;
    while (evals < config.max_ls_steps) {
      double ft = 0.0;
      double st = 0.0;
      evaluate(t, ft, st);
      if (approx_sufficient(ft, st) && curvature(st)) {
        f_new = ft;
        slope_new = st;
        accepted = true;
        break;
      }
      if (!sufficient(t, ft) || (t_prev > 0.0 && ft >= f_prev)) {
        accepted = zoom(t_prev, f_prev, s_prev, t, ft, st);
        break;
      }
      if (curvature(st)) {
        f_new = ft;
        slope_new = st;
        accepted = true;
        break;
      }
      if (st >= 0.0) {
        accepted = zoom(t, ft, st, t_prev, f_prev, s_prev);
        break;
      }
      t_prev = t;
      f_prev = ft;
      s_prev = st;
      t *= 2.0;
    }

    if (!accepted) {
      if (!s_hist.empty() && !retried_steepest) {
        // Drop the curvature memory and retry along steepest descent.
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        retried_steepest = true;
        continue;
      }
      trace.status = OptimizerStatus::line_search_failed;
      break;
    }
    retried_steepest = false;

    // x_trial/g_trial hold the accepted point: acceptance always follows
    // its own evaluation.
    Vector s = x_trial - x;
    Vector yv = g_trial - g;
    x = x_trial;
    g = g_trial;
    const double f_old = f;
    f = f_new;
    trace.steps.push_back({t, f0, slope0, f_new, slope_new});
    trace.values.push_back(f);
    trace.grad_norm = Space::norm_inf(g);
    trace.iterations = iter + 1;

    const double sy = Space::dot(s, yv);
    const double s_norm = std::sqrt(Space::dot(s, s));
    const double y_norm = std::sqrt(Space::dot(yv, yv));
    if (sy > 1e-10 * s_norm * y_norm) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    if (config.rel_f_tol > 0.0 &&
        f_old - f <= config.rel_f_tol * std::max(1.0, std::abs(f))) {
      trace.status = trace.grad_norm <= config.grad_tol
                         ? OptimizerStatus::converged
                         : OptimizerStatus::stalled;
      break;
    }
  }
  if (trace.status == OptimizerStatus::max_iterations &&
      trace.grad_norm <= config.grad_tol) {
    trace.status = OptimizerStatus::converged;
  }

  res.x = std::move(x);
  res.value = f;
  res.gradient = std::move(g);
  return res;
}

struct MaximizeResult {
  Eigen::VectorXcd q;
  double value = 0.0;
  // Conjugate cogradient at q.
  Eigen::VectorXcd cograd;
  // values[] and steps[] are reported in the maximization frame.
  OptimizerTrace trace;

  bool converged() const { return trace.status == OptimizerStatus::converged; }
};

// Maximizes a real f(q) given value_and_cograd(q, g) -> f(q), with g set to
// df/d(conj q). Runs on the real isomorphism R^{2n}.
template <class ValueAndCograd>
MaximizeResult maximize(ValueAndCograd&& value_and_cograd,
                        const Eigen::VectorXcd& q0,
                        const OptimizerConfig& config = {}) {
  const Eigen::Index n = q0.size();
  Eigen::VectorXcd q(n);
  Eigen::VectorXcd cg(n);
  auto negated = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    q.real() = x.head(n);
    q.imag() = x.tail(n);
    const double v = value_and_cograd(q, cg);
    grad.resize(2 * n);
    grad.head(n) = -2.0 * cg.real();
    grad.tail(n) = -2.0 * cg.imag();
    return -v;
  };
  Eigen::VectorXd x0(2 * n);
  x0.head(n) = q0.real();
  x0.tail(n) = q0.imag();

  auto res = lbfgs_minimize<RealSpace>(negated, std::move(x0), config);

  MaximizeResult out;
  out.q.resize(n);
  out.q.real() = res.x.head(n);
  out.q.imag() = res.x.tail(n);
  out.value = -res.value;
  out.cograd.resize(n);
  out.cograd.real() = -0.5 * res.gradient.head(n);
  out.cograd.imag() = -0.5 * res.gradient.tail(n);
  out.trace = std::move(res.trace);
  for (auto& v : out.trace.values) v = -v;
  for (auto& s : out.trace.steps) {
    s.value0 = -s.value0;
    s.slope0 = -s.slope0;
    s.value = -s.value;
    s.slope = -s.slope;
  }
  return out;
}

// Overload taking the objective and the conjugate cogradient separately.
template <class Objective, class ConjCograd>
MaximizeResult maximize(Objective&& objective, ConjCograd&& conj_cograd,
                        const Eigen::VectorXcd& q0,
                        const OptimizerConfig& config = {}) {
  auto combined = [&](const Eigen::VectorXcd& q, Eigen::VectorXcd& g) {
    const double v = objective(q);
    if (std::isfinite(v)) g = conj_cograd(q);
    return v;
  };
  return maximize(combined, q0, config);
}

}  // namespace sbra
