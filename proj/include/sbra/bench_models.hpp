#pragma once

// Single-degree-of-freedom shear frame with hysteretic damping.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "sbra/errors.hpp"
#include "sbra/sampling.hpp"

namespace sbra {

struct FrameParams {
  double E;    // Young's modulus of the columns [Pa]
  double I_c;  // column second moment of area [m^4]
  double h;    // storey height [m]
  double rho;  // girder density [kg/m^3]
  double A_g;  // girder cross-section [m^2]
  double l;    // girder length [m]
  double eta;  // loss factor [-]

  double stiffness() const { return 24.0 * E * I_c / (h * h * h); }
  double mass() const { return rho * A_g * l; }
  double natural_frequency() const { return std::sqrt(stiffness() / mass()); }

  static FrameParams from_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    if (x.size() != 7) throw ParameterError("frame model takes 7 parameters");
    return {x(0), x(1), x(2), x(3), x(4), x(5), x(6)};
  }
};

inline constexpr int kFrameDim = 7;
inline constexpr double kFrameFrequencyHz = 5.1;

inline std::complex<double> frame_frf(double omega, const FrameParams& p) {
  const double wn2 = p.stiffness() / p.mass();
  const double sgn = omega > 0.0 ? 1.0 : (omega < 0.0 ? -1.0 : 0.0);
  return omega * omega /
         std::complex<double>(wn2 - omega * omega, p.eta * sgn * wn2);
}

inline std::vector<MarginalSpec> frame_marginals() {
  const double i_c = std::numbers::pi * std::pow(0.3, 4) / 64.0;
  return {
      {"E", MarginalFamily::lognormal, 3e10, 0.1},
      {"I_c", MarginalFamily::lognormal, i_c, 0.1},
      {"h", MarginalFamily::lognormal, 4.0, 0.1},
      {"rho", MarginalFamily::lognormal, 2500.0, 0.05},
      {"A_g", MarginalFamily::lognormal, 0.15, 0.1},
      {"l", MarginalFamily::lognormal, 10.0, 0.1},
      {"eta", MarginalFamily::lognormal, 0.04, 0.3},
  };
}

inline FrameParams frame_nominal() {
  const auto m = frame_marginals();
  return {m[0].mean, m[1].mean, m[2].mean, m[3].mean,
          m[4].mean, m[5].mean, m[6].mean};
}

inline Eigen::VectorXcd frame_responses(const Eigen::MatrixXd& phys,
                                        double frequency_hz) {
  const double omega = 2.0 * std::numbers::pi * frequency_hz;
  Eigen::VectorXcd y(phys.rows());
  for (Eigen::Index i = 0; i < phys.rows(); ++i) {
    y(i) = frame_frf(omega, FrameParams::from_row(phys.row(i)));
  }
  return y;
}

// Evaluates the frame at standard-normal design points.
inline Dataset frame_dataset_at(const Eigen::MatrixXd& std_points,
                                double frequency_hz = kFrameFrequencyHz) {
  Dataset ds;
  ds.inputs_std = std_points;
  ds.inputs_phys = to_physical(std_points, frame_marginals());
  ds.responses = frame_responses(ds.inputs_phys, frequency_hz);
  return ds;
}

inline Dataset frame_dataset(Eigen::Index n, std::uint64_t seed,
                             double frequency_hz = kFrameFrequencyHz) {
  if (n < 1) throw ParameterError("frame_dataset needs n >= 1");
  auto ds = frame_dataset_at(lhs_standard_normal(n, kFrameDim, seed),
                             frequency_hz);
  ds.seed = seed;
  return ds;
}

}  // namespace sbra
