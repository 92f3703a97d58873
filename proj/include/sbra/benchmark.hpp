#pragma once

// Repeated-design study on the frame model: SBRA and least-squares fits per
// experimental-design size, scored on a shared test set.

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sbra/bench_models.hpp"
#include "sbra/errors.hpp"
#include "sbra/metrics.hpp"
#include "sbra/sbra_core.hpp"

namespace sbra {

struct FrameCase {
  int id;
  int max_degree;
  double trunc_q;
};

// Case 2 is nominally m = 5, q = 0.7, but the hyperbolic rule at q = 0.7
// gives 134 terms in 7 dimensions. The reference study's 197 terms (and 551
// in 11 dimensions) are what q = 0.8 produces, so that value is used.
inline FrameCase frame_case(int id) {
  switch (id) {
    case 1: return {1, 10, 0.5};
    case 2: return {2, 5, 0.8};
    case 3: return {3, 3, 1.0};
    default: throw ParameterError("frame case must be 1, 2 or 3");
  }
}

inline FitConfig apply_case(FitConfig config, const FrameCase& c) {
  config.m_p = config.m_q = c.max_degree;
  config.trunc_q_p = config.trunc_q_q = c.trunc_q;
  return config;
}

inline constexpr std::uint64_t kTestSeedOffset = 1'000'000'007ULL;
inline constexpr std::uint64_t kRepSeedStride = 1000;

struct BenchmarkSettings {
  int case_id = 3;
  std::vector<int> n_grid{120, 240};
  int reps = 10;
  std::uint64_t seed = 1;
  Eigen::Index test_size = 10000;
  unsigned threads = 1;
  double frequency_hz = kFrameFrequencyHz;
  FitConfig base_config;  // degrees and truncations are set from the case
};

struct RepetitionResult {
  std::uint64_t seed = 0;
  int n = 0;
  bool ok = false;
  std::string error;
  double rel_err_sbra = 0.0;
  double rel_err_lsq = 0.0;
  long nan_sbra = 0;
  long nan_lsq = 0;
  Sparsity dos;
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
};

struct Quartiles {
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
};

inline Quartiles quartiles(const std::vector<double>& v) {
  return {quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)};
}

struct BenchmarkAggregate {
  int n = 0;
  int ok = 0;
  int failed = 0;
  Quartiles rel_err_sbra;
  Quartiles rel_err_lsq;
  Quartiles dos_total;
  double mean_dos_total = 0.0;
};

struct BenchmarkReport {
  BenchmarkSettings settings;
  std::vector<RepetitionResult> rows;
  std::vector<BenchmarkAggregate> aggregates;

  // True when more than half the repetitions failed at some N.
  bool excessive_failures() const {
    for (const auto& a : aggregates) {
      if (2 * a.failed > a.ok + a.failed) return true;
    }
    return false;
  }
};

inline std::uint64_t repetition_seed(std::uint64_t seed, int rep) {
  return seed + kRepSeedStride * static_cast<std::uint64_t>(rep);
}

inline RepetitionResult run_repetition(const FitConfig& config, int n,
                                       std::uint64_t seed, const Dataset& test,
                                       double frequency_hz) {
  using clock = std::chrono::steady_clock;
  RepetitionResult row;
  row.seed = seed;
  row.n = n;
  try {
    const auto design = frame_dataset(n, seed, frequency_hz);
    const auto t0 = clock::now();
    const auto fitted = fit(design, config);
    row.wall_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    const auto e_sbra = relative_empirical_error(
        predict(fitted.surrogate, test.inputs_std).values, test.responses);
    row.rel_err_sbra = e_sbra.rel_err_emp;
    row.nan_sbra = static_cast<long>(e_sbra.nan_count);
    row.dos = degree_of_sparsity(fitted.surrogate, fitted.report.full_n_p,
                                 fitted.report.full_n_q);
    row.iterations = static_cast<int>(fitted.report.iterations.size());
    row.converged = fitted.report.converged;

    const auto lsq = lsq_surrogate(design, config.m_p, config.trunc_q_p,
                                   config.m_q, config.trunc_q_q);
    const auto e_lsq = relative_empirical_error(
        predict(lsq, test.inputs_std).values, test.responses);
    row.rel_err_lsq = e_lsq.rel_err_emp;
    row.nan_lsq = static_cast<long>(e_lsq.nan_count);
    row.ok = true;
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

inline BenchmarkAggregate aggregate(int n,
                                    const std::vector<RepetitionResult>& rows) {
  BenchmarkAggregate a;
  a.n = n;
  std::vector<double> es, el, dos;
  for (const auto& r : rows) {
    if (r.n != n) continue;
    if (!r.ok) {
      ++a.failed;
      continue;
    }
    ++a.ok;
    es.push_back(r.rel_err_sbra);
    el.push_back(r.rel_err_lsq);
    dos.push_back(r.dos.total);
  }
  a.rel_err_sbra = quartiles(es);
  a.rel_err_lsq = quartiles(el);
  a.dos_total = quartiles(dos);
  double sum = 0.0;
  for (double v : dos) sum += v;
  a.mean_dos_total = dos.empty() ? 0.0 : sum / static_cast<double>(dos.size());
  return a;
}

inline BenchmarkReport run_benchmark(const BenchmarkSettings& settings) {
  if (settings.reps < 1) throw ParameterError("reps must be >= 1");
  if (settings.n_grid.empty()) throw ParameterError("n-grid is empty");
  for (int n : settings.n_grid) {
    if (n < 2) throw ParameterError("n-grid entries must be >= 2");
  }
  if (settings.test_size < 2) throw ParameterError("test size must be >= 2");
  const auto config =
      apply_case(settings.base_config, frame_case(settings.case_id));
  config.validate();

  const auto test = frame_dataset(settings.test_size,
                                  settings.seed + kTestSeedOffset,
                                  settings.frequency_hz);

  BenchmarkReport report;
  report.settings = settings;
  const std::size_t total =
      settings.n_grid.size() * static_cast<std::size_t>(settings.reps);
  report.rows.resize(total);

  // Jobs are independent; each writes only its own row, so the result does
  // not depend on the thread count.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      const int n = settings.n_grid[job / static_cast<std::size_t>(settings.reps)];
      const int rep = static_cast<int>(job % static_cast<std::size_t>(settings.reps));
      report.rows[job] = run_repetition(
          config, n, repetition_seed(settings.seed, rep), test,
          settings.frequency_hz);
    }
  };
  const unsigned threads = std::max(1u, settings.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (int n : settings.n_grid) report.aggregates.push_back(aggregate(n, report.rows));
  return report;
}

namespace io {

inline nlohmann::json to_json(const Quartiles& q) {
  return {{"q25", q.q25}, {"median", q.median}, {"q75", q.q75}};
}

inline nlohmann::json to_json(const BenchmarkReport& r) {
  using nlohmann::json;
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j = {{"seed", row.seed}, {"N", row.n}, {"ok", row.ok}};
    if (row.ok) {
      j.update({{"rel_err_sbra", row.rel_err_sbra},
                {"rel_err_lsq", row.rel_err_lsq},
                {"nan_sbra", row.nan_sbra},
                {"nan_lsq", row.nan_lsq},
                {"dos_total", row.dos.total},
                {"dos_p", row.dos.numerator},
                {"dos_q", row.dos.denominator},
                {"iterations", row.iterations},
                {"converged", row.converged},
                {"wall_ms", row.wall_ms}});
    } else {
      j["error"] = row.error;
    }
    rows.push_back(std::move(j));
  }
  json aggs = json::array();
  for (const auto& a : r.aggregates) {
    aggs.push_back({{"N", a.n},
                    {"ok", a.ok},
                    {"failed", a.failed},
                    {"rel_err_sbra", to_json(a.rel_err_sbra)},
                    {"rel_err_lsq", to_json(a.rel_err_lsq)},
                    {"dos_total", to_json(a.dos_total)},
                    {"mean_dos_total", a.mean_dos_total}});
  }
  const auto c = frame_case(r.settings.case_id);
  return {{"model", "frame"},
          {"case", c.id},
          {"max_degree", c.max_degree},
          {"trunc_q", c.trunc_q},
          {"frequency_hz", r.settings.frequency_hz},
          {"reps", r.settings.reps},
          {"seed", r.settings.seed},
          {"test_size", r.settings.test_size},
          {"rows", rows},
          {"aggregates", aggs}};
}

}  // namespace io

}  // namespace sbra
