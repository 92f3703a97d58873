#pragma once

// JSON and CSV persistence for bases, marginals, configs, surrogates,
// reports and datasets.

#include <json.hpp>

#include <Eigen/Dense>

#include <cerrno>
#include <cinttypes>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sbra/errors.hpp"
#include "sbra/metrics.hpp"
#include "sbra/pce_basis.hpp"
#include "sbra/sampling.hpp"
#include "sbra/sbra_core.hpp"
#include "sbra/surrogate.hpp"

namespace sbra::io {

using json = nlohmann::json;

// ---------------------------------------------------------------- files

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline json read_json(const std::string& path) {
  const auto text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

inline void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

namespace detail {

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) {
    throw IoError(where + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(where + ": field '" + key + "': " + e.what());
  }
}

template <class T>
void optional_field(const json& j, const char* key, T& out,
                    const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(where + ": field '" + key + "': " + e.what());
  }
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known,
                           const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw IoError(where + ": unknown field '" + key + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------- complex

inline json to_json(const Eigen::VectorXcd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    arr.push_back({v(i).real(), v(i).imag()});
  }
  return arr;
}

inline Eigen::VectorXcd complex_vector_from_json(const json& j,
                                                 const std::string& where) {
  if (!j.is_array()) throw IoError(where + ": expected an array of [re, im]");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
        !e[1].is_number()) {
      throw IoError(where + "[" + std::to_string(i) + "]: expected [re, im]");
    }
    v(static_cast<Eigen::Index>(i)) = {e[0].get<double>(), e[1].get<double>()};
  }
  return v;
}

// ---------------------------------------------------------------- basis

inline json to_json(const BasisSpec& b) {
  return {{"dim", b.dim()},
          {"max_degree", b.max_degree()},
          {"trunc_q", b.trunc_q()},
          {"indices", b.indices()}};
}

inline BasisSpec basis_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw IoError(where + ": expected an object");
  try {
    return BasisSpec(detail::field<int>(j, "dim", where),
                     detail::field<int>(j, "max_degree", where),
                     detail::field<double>(j, "trunc_q", where),
                     detail::field<std::vector<MultiIndex>>(j, "indices", where));
  } catch (const ParameterError& e) {
    throw IoError(where + ": " + e.what());
  }
}

// ---------------------------------------------------------------- marginals

inline json to_json(const std::vector<MarginalSpec>& ms) {
  json arr = json::array();
  for (const auto& m : ms) {
    arr.push_back({{"name", m.name},
                   {"family", "lognormal"},
                   {"mean", m.mean},
                   {"cov", m.cov}});
  }
  return arr;
}

inline std::vector<MarginalSpec> marginals_from_json(const json& j,
                                                     const std::string& where) {
  if (!j.is_array()) throw IoError(where + ": expected an array of marginals");
  std::vector<MarginalSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    const auto& e = j[i];
    if (!e.is_object()) throw IoError(at + ": expected an object");
    detail::reject_unknown(e, {"name", "family", "mean", "cov"}, at);
    MarginalSpec m;
    m.name = detail::field<std::string>(e, "name", at);
    const auto family = detail::field<std::string>(e, "family", at);
    if (family != "lognormal") {
      throw IoError(at + ": unsupported family '" + family + "'");
    }
    m.mean = detail::field<double>(e, "mean", at);
    m.cov = detail::field<double>(e, "cov", at);
    if (!(m.mean > 0.0) || !(m.cov > 0.0)) {
      throw IoError(at + ": mean and cov must be positive");
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline std::vector<MarginalSpec> load_marginals(const std::string& path) {
  return marginals_from_json(read_json(path), path);
}

// ---------------------------------------------------------------- config

inline json to_json(const OptimizerConfig& c) {
  return {{"memory", c.memory},       {"max_iters", c.max_iters},
          {"grad_tol", c.grad_tol},   {"c1", c.c1},
          {"c2", c.c2},               {"max_ls_steps", c.max_ls_steps},
          {"rel_f_tol", c.rel_f_tol}};
}

inline json to_json(const FitConfig& c) {
  return {{"m_p", c.m_p},
          {"m_q", c.m_q},
          {"trunc_q_p", c.trunc_q_p},
          {"trunc_q_q", c.trunc_q_q},
          {"alpha_max_p", c.alpha_max_p},
          {"alpha_max_q", c.alpha_max_q},
          {"eps_alpha", c.eps_alpha},
          {"eps_beta", c.eps_beta},
          {"max_iter", c.max_iter},
          {"initial_noise_fraction", c.initial_noise_fraction},
          {"k_norm", to_string(c.k_norm)},
          {"init", to_string(c.init)},
          {"seed", c.seed},
          {"a", c.a},
          {"b", c.b},
          {"c", c.c},
          {"d", c.d},
          {"precondition_q", c.precondition_q},
          {"optimizer", to_json(c.optimizer)}};
}

inline NormKind norm_kind_from_string(const std::string& s,
                                      const std::string& where) {
  if (s == "two" || s == "2") return NormKind::two;
  if (s == "infinity" || s == "inf") return NormKind::infinity;
  throw IoError(where + ": k_norm must be 'two' or 'infinity', got '" + s + "'");
}

inline InitMode init_mode_from_string(const std::string& s,
                                      const std::string& where) {
  if (s == "lsq") return InitMode::lsq;
  if (s == "random") return InitMode::random;
  throw IoError(where + ": init must be 'lsq' or 'random', got '" + s + "'");
}

// Missing fields keep their defaults; unknown fields are rejected.
inline FitConfig config_from_json(const json& j, const std::string& where,
                                  FitConfig c = {}) {
  if (!j.is_object()) throw IoError(where + ": expected an object");
  detail::reject_unknown(
      j,
      {"m_p", "m_q", "trunc_q_p", "trunc_q_q", "alpha_max_p", "alpha_max_q",
       "eps_alpha", "eps_beta", "max_iter", "initial_noise_fraction", "k_norm",
       "init", "seed", "a", "b", "c", "d", "precondition_q", "optimizer"},
      where);
  detail::optional_field(j, "m_p", c.m_p, where);
  detail::optional_field(j, "m_q", c.m_q, where);
  detail::optional_field(j, "trunc_q_p", c.trunc_q_p, where);
  detail::optional_field(j, "trunc_q_q", c.trunc_q_q, where);
  detail::optional_field(j, "alpha_max_p", c.alpha_max_p, where);
  detail::optional_field(j, "alpha_max_q", c.alpha_max_q, where);
  detail::optional_field(j, "eps_alpha", c.eps_alpha, where);
  detail::optional_field(j, "eps_beta", c.eps_beta, where);
  detail::optional_field(j, "max_iter", c.max_iter, where);
  detail::optional_field(j, "initial_noise_fraction", c.initial_noise_fraction,
                         where);
  if (j.contains("k_norm")) {
    c.k_norm = norm_kind_from_string(
        detail::field<std::string>(j, "k_norm", where), where);
  }
  if (j.contains("init")) {
    c.init =
        init_mode_from_string(detail::field<std::string>(j, "init", where), where);
  }
  detail::optional_field(j, "seed", c.seed, where);
  detail::optional_field(j, "a", c.a, where);
  detail::optional_field(j, "b", c.b, where);
  detail::optional_field(j, "c", c.c, where);
  detail::optional_field(j, "d", c.d, where);
  detail::optional_field(j, "precondition_q", c.precondition_q, where);
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    const std::string at = where + ".optimizer";
    if (!o.is_object()) throw IoError(at + ": expected an object");
    detail::reject_unknown(o,
                           {"memory", "max_iters", "grad_tol", "c1", "c2",
                            "max_ls_steps", "rel_f_tol"},
                           at);
    detail::optional_field(o, "memory", c.optimizer.memory, at);
    detail::optional_field(o, "max_iters", c.optimizer.max_iters, at);
    detail::optional_field(o, "grad_tol", c.optimizer.grad_tol, at);
    detail::optional_field(o, "c1", c.optimizer.c1, at);
    detail::optional_field(o, "c2", c.optimizer.c2, at);
    detail::optional_field(o, "max_ls_steps", c.optimizer.max_ls_steps, at);
    detail::optional_field(o, "rel_f_tol", c.optimizer.rel_f_tol, at);
  }
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw IoError(where + ": " + e.what());
  }
  return c;
}

inline FitConfig load_config(const std::string& path) {
  return config_from_json(read_json(path), path);
}

// FNV-1a over the canonical (sorted-key, compact) JSON form.
inline std::string config_hash(const FitConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

// ---------------------------------------------------------------- surrogate

struct SurrogateMeta {
  std::string config_hash;
  int iterations = 0;
  bool converged = false;
  // Marginals of the physical inputs, when the data had them.
  std::optional<std::vector<MarginalSpec>> marginals;

  friend bool operator==(const SurrogateMeta&, const SurrogateMeta&) = default;
};

inline json surrogate_to_json(const RationalSurrogate& s,
                              const SurrogateMeta& meta) {
  json m = {{"config_hash", meta.config_hash},
            {"iterations", meta.iterations},
            {"converged", meta.converged}};
  m["marginals"] = meta.marginals ? to_json(*meta.marginals) : json(nullptr);
  return {{"basis_p", to_json(s.basis_p)},
          {"basis_q", to_json(s.basis_q)},
          {"p", to_json(s.p)},
          {"q", to_json(s.q)},
          {"meta", m}};
}

struct LoadedSurrogate {
  RationalSurrogate surrogate;
  SurrogateMeta meta;
};

inline LoadedSurrogate surrogate_from_json(const json& j,
                                           const std::string& where) {
  if (!j.is_object()) throw IoError(where + ": expected an object");
  for (const char* key : {"basis_p", "basis_q", "p", "q"}) {
    if (!j.contains(key)) throw IoError(where + ": missing field '" + key + "'");
  }
  LoadedSurrogate out;
  auto& s = out.surrogate;
  s.basis_p = basis_from_json(j.at("basis_p"), where + ".basis_p");
  s.basis_q = basis_from_json(j.at("basis_q"), where + ".basis_q");
  s.p = complex_vector_from_json(j.at("p"), where + ".p");
  s.q = complex_vector_from_json(j.at("q"), where + ".q");
  if (static_cast<std::size_t>(s.p.size()) != s.basis_p.size() ||
      static_cast<std::size_t>(s.q.size()) != s.basis_q.size()) {
    throw IoError(where + ": coefficient count does not match basis size");
  }
  if (s.basis_p.dim() != s.basis_q.dim()) {
    throw IoError(where + ": numerator and denominator dimensions differ");
  }
  if (j.contains("meta") && j.at("meta").is_object()) {
    const auto& m = j.at("meta");
    const std::string at = where + ".meta";
    detail::optional_field(m, "config_hash", out.meta.config_hash, at);
    detail::optional_field(m, "iterations", out.meta.iterations, at);
    detail::optional_field(m, "converged", out.meta.converged, at);
    if (m.contains("marginals") && !m.at("marginals").is_null()) {
      out.meta.marginals = marginals_from_json(m.at("marginals"), at + ".marginals");
    }
  }
  return out;
}

inline void save_surrogate(const std::string& path, const RationalSurrogate& s,
                           const SurrogateMeta& meta) {
  write_json(path, surrogate_to_json(s, meta));
}

inline LoadedSurrogate load_surrogate(const std::string& path) {
  return surrogate_from_json(read_json(path), path);
}

// ---------------------------------------------------------------- reports

inline json to_json(const FitReport& r) {
  json iters = json::array();
  for (const auto& it : r.iterations) {
    iters.push_back({{"iteration", it.iteration},
                     {"n_p", it.n_p},
                     {"n_q", it.n_q},
                     {"objective", it.objective},
                     {"delta_log_alpha", it.delta_log_alpha},
                     {"delta_log_beta", it.delta_log_beta},
                     {"beta", it.beta},
                     {"wall_ms", it.wall_ms},
                     {"optimizer_iterations", it.optimizer_iterations},
                     {"optimizer_status", to_string(it.optimizer_status)}});
  }
  return {{"converged", r.converged},
          {"n_iterations", r.iterations.size()},
          {"full_n_p", r.full_n_p},
          {"full_n_q", r.full_n_q},
          {"warnings", r.warnings},
          {"iterations", iters}};
}

inline json to_json(const ErrorReport& e) {
  return {{"err_emp", e.err_emp},
          {"rel_err_emp", e.rel_err_emp},
          {"n_validation", e.n_validation},
          {"nan_count", e.nan_count}};
}

// ---------------------------------------------------------------- CSV

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto cell = line.substr(start, comma == std::string_view::npos
                                       ? std::string_view::npos
                                       : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) {
      cell.remove_prefix(1);
    }
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' ||
                             cell.back() == '\r')) {
      cell.remove_suffix(1);
    }
    out.push_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(std::string_view cell, const std::string& where) {
  const std::string s(cell);
  if (s.empty()) throw IoError(where + ": empty value");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw IoError(where + ": cannot parse '" + s + "' as a number");
  }
  return v;
}

}  // namespace detail

// Parsed numeric table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

inline CsvTable parse_csv(const std::string& text, const std::string& where) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv(line);
    if (t.header.empty()) {
      for (auto c : cells) t.header.emplace_back(c);
      continue;
    }
    const std::string at = where + ": row " + std::to_string(rows.size() + 1) +
                           " (line " + std::to_string(line_no) + ")";
    if (cells.size() != t.header.size()) {
      throw IoError(at + ": expected " + std::to_string(t.header.size()) +
                    " fields, got " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      row.push_back(detail::parse_double(cells[c], at + ", field '" + t.header[c] + "'"));
    }
    rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw IoError(where + ": missing header row");
  t.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return t;
}

inline std::string x_header(Eigen::Index d) {
  std::string h;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (j) h += ',';
    h += "x" + std::to_string(j + 1);
  }
  return h;
}

// Number of leading x1..xd columns; throws unless they are contiguous.
inline Eigen::Index count_x_columns(const std::vector<std::string>& header,
                                    const std::string& where) {
  Eigen::Index d = 0;
  while (static_cast<std::size_t>(d) < header.size() &&
         header[static_cast<std::size_t>(d)] == "x" + std::to_string(d + 1)) {
    ++d;
  }
  if (d == 0) throw IoError(where + ": header must start with x1");
  return d;
}

inline std::string points_to_csv(const Eigen::MatrixXd& x) {
  std::string out = x_header(x.cols()) + "\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) out += ',';
      out += detail::format_double(x(i, j));
    }
    out += '\n';
  }
  return out;
}

// Header x1..xd,y_re,y_im; inputs in physical coordinates.
inline std::string dataset_to_csv(const Dataset& ds) {
  std::string out = x_header(ds.dim()) + ",y_re,y_im\n";
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      out += detail::format_double(ds.inputs_phys(i, j));
      out += ',';
    }
    out += detail::format_double(ds.responses(i).real());
    out += ',';
    out += detail::format_double(ds.responses(i).imag());
    out += '\n';
  }
  return out;
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
  write_text(path, dataset_to_csv(ds));
}

// Standard-normal coordinates are recomputed from the marginals; without
// marginals the x columns are taken as standard-normal coordinates.
inline Dataset dataset_from_csv(
    const std::string& text, const std::string& where,
    const std::optional<std::vector<MarginalSpec>>& marginals) {
  const auto t = parse_csv(text, where);
  const Eigen::Index d = count_x_columns(t.header, where);
  if (t.header.size() != static_cast<std::size_t>(d + 2) ||
      t.header[static_cast<std::size_t>(d)] != "y_re" ||
      t.header[static_cast<std::size_t>(d + 1)] != "y_im") {
    throw IoError(where + ": header must be x1,...,xd,y_re,y_im");
  }
  Dataset ds;
  ds.inputs_phys = t.values.leftCols(d);
  ds.responses.resize(t.values.rows());
  for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
    ds.responses(i) = {t.values(i, d), t.values(i, d + 1)};
  }
  try {
    ds.inputs_std = marginals ? to_standard(ds.inputs_phys, *marginals)
                              : ds.inputs_phys;
  } catch (const ParameterError& e) {
    throw IoError(where + ": " + e.what());
  }
  return ds;
}

inline Dataset load_dataset(
    const std::string& path,
    const std::optional<std::vector<MarginalSpec>>& marginals = std::nullopt) {
  return dataset_from_csv(read_text(path), path, marginals);
}

// x1..xd columns of a points file; any trailing columns are ignored.
inline Eigen::MatrixXd load_points(const std::string& path) {
  const auto t = parse_csv(read_text(path), path);
  return t.values.leftCols(count_x_columns(t.header, path));
}

inline std::string predictions_to_csv(const Prediction& pred) {
  std::vector<char> flag(static_cast<std::size_t>(pred.values.size()), 0);
  for (auto i : pred.near_pole) flag[static_cast<std::size_t>(i)] = 1;
  std::string out = "y_re,y_im,flag\n";
  for (Eigen::Index i = 0; i < pred.values.size(); ++i) {
    out += detail::format_double(pred.values(i).real());
    out += ',';
    out += detail::format_double(pred.values(i).imag());
    out += flag[static_cast<std::size_t>(i)] ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace sbra::io
