// Fits a sparse rational surrogate to the shear-frame FRF and compares it
// with the least-squares rational fit on an independent test set.
//
//   frame_demo [case=3] [N=240] [seed=1]

#include <cstdio>
#include <cstdlib>

#include "sbra/sbra.hpp"

int main(int argc, char** argv) {
  const int case_id = argc > 1 ? std::atoi(argv[1]) : 3;
  const int n = argc > 2 ? std::atoi(argv[2]) : 240;
  const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 1;

  try {
    const auto config = sbra::apply_case(sbra::FitConfig{}, sbra::frame_case(case_id));
    const auto design = sbra::frame_dataset(n, seed);
    const auto test = sbra::frame_dataset(10000, seed + sbra::kTestSeedOffset);

    const auto fitted = sbra::fit(design, config);
    const auto& s = fitted.surrogate;
    const auto pred = sbra::predict(s, test.inputs_std);
    const auto err = sbra::relative_empirical_error(pred.values, test.responses);
    const auto lsq = sbra::lsq_surrogate(design, config.m_p, config.trunc_q_p,
                                         config.m_q, config.trunc_q_q);
    const auto err_lsq = sbra::relative_empirical_error(
        sbra::predict(lsq, test.inputs_std).values, test.responses);
    const auto dos = sbra::degree_of_sparsity(s, fitted.report.full_n_p,
                                              fitted.report.full_n_q);

    std::printf("case %d, N = %d, %zu candidate terms per polynomial\n", case_id,
                n, fitted.report.full_n_p);
    std::printf("iterations %zu (%s)\n", fitted.report.iterations.size(),
                fitted.report.converged ? "converged" : "max_iter reached");
    std::printf("retained terms: numerator %zu, denominator %zu (total %.3f)\n",
                s.basis_p.size(), s.basis_q.size(), dos.total);
    std::printf("relative empirical error: sparse Bayesian %.3e, least squares %.3e\n",
                err.rel_err_emp, err_lsq.rel_err_emp);

    // Modes of the real part of the response density.
    Eigen::VectorXd re_true = test.responses.real();
    Eigen::VectorXd re_pred = pred.values.real();
    const auto grid = sbra::kde_grid(re_true, 2001);
    const auto modes_true = sbra::find_modes(sbra::kde_1d(re_true, grid));
    const auto modes_pred = sbra::find_modes(sbra::kde_1d(re_pred, grid));
    std::printf("Re(h) density modes, model:    ");
    for (auto i : modes_true) std::printf(" %.3f", grid(i));
    std::printf("\nRe(h) density modes, surrogate:");
    for (auto i : modes_pred) std::printf(" %.3f", grid(i));
    std::printf("\n");
  } catch (const sbra::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
