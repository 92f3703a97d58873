// Command-line front end: sample, fit, predict, benchmark.
//
// Exit codes: 0 ok, 1 usage or I/O error, 2 fit stopped at max_iter,
// 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sbra/sbra.hpp"

namespace {

namespace fs = std::filesystem;
using sbra::io::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitNumerical = 3;

// Relative output paths land in $SBRA_OUTPUT_DIR when it is set.
std::string output_path(const std::string& path) {
  const char* dir = std::getenv("SBRA_OUTPUT_DIR");
  if (!dir || !*dir || fs::path(path).is_absolute()) return path;
  fs::create_directories(dir);
  return (fs::path(dir) / path).string();
}

std::string default_report_path(const std::string& surrogate_path) {
  fs::path p(surrogate_path);
  return (p.parent_path() / (p.stem().string() + ".report.json")).string();
}

const char* error_kind(const sbra::Error& e) {
  if (dynamic_cast<const sbra::SingularDenominatorError*>(&e)) return "singular_denominator";
  if (dynamic_cast<const sbra::AllPrunedError*>(&e)) return "all_pruned";
  if (dynamic_cast<const sbra::NumericalError*>(&e)) return "numerical";
  if (dynamic_cast<const sbra::DegenerateError*>(&e)) return "degenerate";
  if (dynamic_cast<const sbra::ParameterError*>(&e)) return "parameter";
  if (dynamic_cast<const sbra::IoError*>(&e)) return "io";
  return "error";
}

int exit_code_for(const sbra::Error& e) {
  if (dynamic_cast<const sbra::IoError*>(&e) ||
      dynamic_cast<const sbra::ParameterError*>(&e)) {
    return kExitUsage;
  }
  return kExitNumerical;
}

struct SampleOptions {
  std::string marginals;
  long long n = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string model;
  double freq_hz = sbra::kFrameFrequencyHz;
};

int run_sample(const SampleOptions& o) {
  if (o.n < 1) throw sbra::ParameterError("--n must be >= 1");
  std::vector<sbra::MarginalSpec> marginals;
  if (!o.marginals.empty()) {
    marginals = sbra::io::load_marginals(o.marginals);
  } else if (o.model == "frame") {
    marginals = sbra::frame_marginals();
  } else {
    throw sbra::ParameterError("--marginals is required without --model");
  }
  const auto d = static_cast<Eigen::Index>(marginals.size());
  if (d < 1) throw sbra::ParameterError("marginals file lists no variables");
  const Eigen::MatrixXd std_points = sbra::lhs_standard_normal(o.n, d, o.seed);
  const Eigen::MatrixXd phys = sbra::to_physical(std_points, marginals);

  const auto out = output_path(o.out);
  if (o.model == "frame") {
    if (d != sbra::kFrameDim) {
      throw sbra::ParameterError("the frame model needs 7 marginals");
    }
    sbra::Dataset ds;
    ds.inputs_std = std_points;
    ds.inputs_phys = phys;
    ds.responses = sbra::frame_responses(phys, o.freq_hz);
    ds.seed = o.seed;
    sbra::io::save_dataset(out, ds);
  } else {
    sbra::io::write_text(out, sbra::io::points_to_csv(phys));
  }
  std::cerr << "wrote " << o.n << " samples to " << out << "\n";
  return kExitOk;
}

struct FitOptions {
  std::string data;
  std::string config;
  std::string out = "surrogate.json";
  std::string report;
  std::string marginals;
  std::string init;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iter;
};

int run_fit(const FitOptions& o) {
  sbra::FitConfig config;
  if (!o.config.empty()) config = sbra::io::load_config(o.config);
  if (!o.init.empty()) config.init = sbra::io::init_mode_from_string(o.init, "--init");
  if (o.seed) config.seed = *o.seed;
  if (o.max_iter) config.max_iter = *o.max_iter;
  config.validate();

  std::optional<std::vector<sbra::MarginalSpec>> marginals;
  if (!o.marginals.empty()) marginals = sbra::io::load_marginals(o.marginals);
  const auto data = sbra::io::load_dataset(o.data, marginals);
  if (data.size() < 1) throw sbra::IoError(o.data + ": no data rows");

  const auto out = output_path(o.out);
  const auto report_path =
      output_path(o.report.empty() ? default_report_path(o.out) : o.report);

  sbra::FitResult result;
  try {
    result = sbra::fit(data, config);
  } catch (const sbra::Error& e) {
    if (exit_code_for(e) == kExitUsage) throw;
    json diag = {{"error", {{"kind", error_kind(e)}, {"message", e.what()}}},
                 {"config", sbra::io::to_json(config)}};
    if (auto* s = dynamic_cast<const sbra::SingularDenominatorError*>(&e)) {
      diag["error"]["point_index"] = s->point_index();
    }
    sbra::io::write_json(report_path, diag);
    std::cerr << "fit failed: " << e.what() << "\n"
              << "diagnostics written to " << report_path << "\n";
    return kExitNumerical;
  }

  sbra::io::SurrogateMeta meta;
  meta.config_hash = sbra::io::config_hash(config);
  meta.iterations = static_cast<int>(result.report.iterations.size());
  meta.converged = result.report.converged;
  meta.marginals = marginals;
  sbra::io::save_surrogate(out, result.surrogate, meta);

  json report = sbra::io::to_json(result.report);
  report["config"] = sbra::io::to_json(config);
  report["config_hash"] = meta.config_hash;
  report["n_data"] = data.size();
  report["active_p"] = result.state.active_p;
  report["active_q"] = result.state.active_q;
  report["beta"] = result.state.beta;
  sbra::io::write_json(report_path, report);

  std::cerr << "retained " << result.surrogate.basis_p.size() << "/"
            << result.report.full_n_p << " numerator and "
            << result.surrogate.basis_q.size() << "/" << result.report.full_n_q
            << " denominator terms after " << meta.iterations
            << " iterations\n";
  for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << "\n";
  if (!result.report.converged) {
    std::cerr << "not converged within max_iter = " << config.max_iter << "\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

struct PredictOptions {
  std::string surrogate;
  std::string points;
  std::string out;
};

int run_predict(const PredictOptions& o) {
  const auto loaded = sbra::io::load_surrogate(o.surrogate);
  const auto& s = loaded.surrogate;
  const auto text = sbra::io::read_text(o.points);

  sbra::Prediction pred;
  bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
  if (!blank) {
    const auto table = sbra::io::parse_csv(text, o.points);
    const Eigen::Index d = sbra::io::count_x_columns(table.header, o.points);
    if (d != s.dim()) {
      throw sbra::ParameterError(o.points + " has " + std::to_string(d) +
                                 " input columns, surrogate expects " +
                                 std::to_string(s.dim()));
    }
    Eigen::MatrixXd x = table.values.leftCols(d);
    if (loaded.meta.marginals) x = sbra::to_standard(x, *loaded.meta.marginals);
    pred = sbra::predict(s, x);
  }
  const auto out = output_path(o.out);
  sbra::io::write_text(out, sbra::io::predictions_to_csv(pred));
  if (!pred.near_pole.empty()) {
    std::cerr << "warning: " << pred.near_pole.size()
              << " points lie on a pole of the surrogate (flag = 1)\n";
  }
  return kExitOk;
}

struct BenchmarkOptions {
  std::string model = "frame";
  int case_id = 3;
  std::vector<int> n_grid{120, 240};
  int reps = 10;
  std::uint64_t seed = 1;
  std::string out;
  unsigned threads = 1;
  long long test_size = 10000;
  std::string config;
  double freq_hz = sbra::kFrameFrequencyHz;
};

int run_benchmark(const BenchmarkOptions& o) {
  if (o.model != "frame") throw sbra::ParameterError("only --model frame is built in");
  sbra::BenchmarkSettings st;
  st.case_id = o.case_id;
  st.n_grid = o.n_grid;
  st.reps = o.reps;
  st.seed = o.seed;
  st.threads = o.threads;
  st.test_size = o.test_size;
  st.frequency_hz = o.freq_hz;
  if (!o.config.empty()) st.base_config = sbra::io::load_config(o.config);

  const auto report = sbra::run_benchmark(st);
  const auto out = output_path(
      o.out.empty() ? "benchmark_case" + std::to_string(o.case_id) + ".json" : o.out);
  sbra::io::write_json(out, sbra::io::to_json(report));

  for (const auto& a : report.aggregates) {
    std::fprintf(stderr,
                 "N=%d ok=%d failed=%d median rel err: sbra %.3e lsq %.3e, "
                 "mean dos %.3f\n",
                 a.n, a.ok, a.failed, a.rel_err_sbra.median,
                 a.rel_err_lsq.median, a.mean_dos_total);
  }
  if (report.excessive_failures()) {
    std::cerr << "more than half of the repetitions failed at some N\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Bayesian rational approximation"};
  app.require_subcommand(1);

  SampleOptions so;
  auto* sample = app.add_subcommand("sample", "Latin hypercube design, optionally evaluated");
  sample->add_option("--marginals", so.marginals, "Marginals JSON")->check(CLI::ExistingFile);
  sample->add_option("--n", so.n, "Number of samples")->required();
  sample->add_option("--seed", so.seed, "Design seed")->required();
  sample->add_option("--out", so.out, "Output CSV")->required();
  sample->add_option("--model", so.model, "Evaluate a built-in model")
      ->check(CLI::IsMember({"frame"}));
  sample->add_option("--freq-hz", so.freq_hz, "Excitation frequency [Hz]");

  FitOptions fo;
  auto* fit = app.add_subcommand("fit", "Fit a sparse rational surrogate");
  fit->add_option("--data", fo.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--config", fo.config, "FitConfig JSON")->check(CLI::ExistingFile);
  fit->add_option("--out", fo.out, "Surrogate JSON");
  fit->add_option("--report", fo.report, "Fit report JSON");
  fit->add_option("--marginals", fo.marginals, "Marginals of the x columns")
      ->check(CLI::ExistingFile);
  fit->add_option("--init", fo.init, "Initial coefficients")
      ->check(CLI::IsMember({"lsq", "random"}));
  fit->add_option("--seed", fo.seed, "Seed for --init random");
  fit->add_option("--max-iter", fo.max_iter, "Iteration cap");

  PredictOptions po;
  auto* predict = app.add_subcommand("predict", "Evaluate a surrogate");
  predict->add_option("--surrogate", po.surrogate, "Surrogate JSON")
      ->required()->check(CLI::ExistingFile);
  predict->add_option("--points", po.points, "Points CSV")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", po.out, "Predictions CSV")->required();

  BenchmarkOptions bo;
  auto* bench = app.add_subcommand("benchmark", "Repeated-design study on a built-in model");
  bench->add_option("--model", bo.model, "Model")->check(CLI::IsMember({"frame"}));
  bench->add_option("--case", bo.case_id, "Basis case")->check(CLI::Range(1, 3));
  bench->add_option("--n-grid", bo.n_grid, "Design sizes")->delimiter(',')
      ->check(CLI::PositiveNumber);
  bench->add_option("--reps", bo.reps, "Repetitions per size")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bo.seed, "Base seed");
  bench->add_option("--out", bo.out, "Report JSON");
  bench->add_option("--threads", bo.threads, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--test-size", bo.test_size, "Test set size")->check(CLI::Range(2LL, 100000000LL));
  bench->add_option("--config", bo.config, "FitConfig JSON")->check(CLI::ExistingFile);
  bench->add_option("--freq-hz", bo.freq_hz, "Excitation frequency [Hz]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sample) return run_sample(so);
    if (*fit) return run_fit(fo);
    if (*predict) return run_predict(po);
    if (*bench) return run_benchmark(bo);
  } catch (const sbra::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
