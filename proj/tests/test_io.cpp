#include <gtest/gtest.h>

#include <filesystem>

#include "sbra/io.hpp"
#include "sbra/sbra.hpp"

namespace {

using cd = std::complex<double>;
namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "sbra_io_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Json, ComplexVectorRoundTrip) {
  Eigen::VectorXcd v(3);
  v << cd(1.0, -2.0), cd(0.1, 1e-300), cd(-3.25e10, 0.0);
  EXPECT_EQ(sbra::io::complex_vector_from_json(sbra::io::to_json(v), "v"), v);
  EXPECT_THROW(sbra::io::complex_vector_from_json(nlohmann::json::parse("[[1,2,3]]"), "v"),
               sbra::IoError);
}

TEST(Json, BasisRoundTrip) {
  const auto b = sbra::generate_indices(4, 5, 0.7);
  EXPECT_EQ(sbra::io::basis_from_json(sbra::io::to_json(b), "b"), b);
  auto j = sbra::io::to_json(b);
  j["trunc_q"] = 2.0;
  EXPECT_THROW(sbra::io::basis_from_json(j, "b"), sbra::IoError);
}

TEST(Json, MarginalsRoundTripAndValidation) {
  const auto m = sbra::frame_marginals();
  EXPECT_EQ(sbra::io::marginals_from_json(sbra::io::to_json(m), "m"), m);
  auto j = sbra::io::to_json(m);
  j[0]["family"] = "gamma";
  EXPECT_THROW(sbra::io::marginals_from_json(j, "m"), sbra::IoError);
  j = sbra::io::to_json(m);
  j[1]["cov"] = -0.1;
  EXPECT_THROW(sbra::io::marginals_from_json(j, "m"), sbra::IoError);
}

TEST(Json, ConfigRoundTripAndHash) {
  sbra::FitConfig c;
  c.m_p = 5;
  c.trunc_q_q = 0.6;
  c.k_norm = sbra::NormKind::two;
  c.init = sbra::InitMode::random;
  c.seed = 77;
  c.optimizer.memory = 7;
  const auto back = sbra::io::config_from_json(sbra::io::to_json(c), "c");
  EXPECT_EQ(sbra::io::to_json(back), sbra::io::to_json(c));
  EXPECT_EQ(sbra::io::config_hash(back), sbra::io::config_hash(c));
  c.seed = 78;
  EXPECT_NE(sbra::io::config_hash(back), sbra::io::config_hash(c));
}

TEST(Json, ConfigDefaultsAndRejections) {
  const auto c = sbra::io::config_from_json(nlohmann::json::parse(R"({"m_p": 4})"), "c");
  EXPECT_EQ(c.m_p, 4);
  EXPECT_EQ(c.m_q, sbra::FitConfig{}.m_q);
  EXPECT_THROW(sbra::io::config_from_json(nlohmann::json::parse(R"({"mp": 4})"), "c"), sbra::IoError);
  EXPECT_THROW(sbra::io::config_from_json(nlohmann::json::parse(R"({"k_norm": "one"})"), "c"),
               sbra::IoError);
  EXPECT_THROW(sbra::io::config_from_json(nlohmann::json::parse(R"({"max_iter": 0})"), "c"),
               sbra::IoError);
  EXPECT_THROW(sbra::io::config_from_json(nlohmann::json::parse(R"({"optimizer": {"lr": 1}})"), "c"),
               sbra::IoError);
}

TEST(Json, SurrogateFileRoundTrip) {
  sbra::RationalSurrogate s;
  s.basis_p = sbra::generate_indices(2, 3, 1.0);
  s.basis_q = sbra::generate_indices(2, 1, 1.0);
  s.p = Eigen::VectorXcd::LinSpaced(10, cd(-1, 0.5), cd(2, -0.25));
  s.q = Eigen::VectorXcd::Constant(3, cd(0.1, 1.0 / 3.0));
  sbra::io::SurrogateMeta meta{"abc", 12, true, sbra::frame_marginals()};
  meta.marginals->resize(2);
  const auto path = scratch("surrogate.json").string();
  sbra::io::save_surrogate(path, s, meta);
  const auto back = sbra::io::load_surrogate(path);
  EXPECT_EQ(back.surrogate.basis_p, s.basis_p);
  EXPECT_EQ(back.surrogate.basis_q, s.basis_q);
  EXPECT_EQ(back.surrogate.p, s.p);
  EXPECT_EQ(back.surrogate.q, s.q);
  EXPECT_EQ(back.meta, meta);

  auto j = sbra::io::surrogate_to_json(s, meta);
  j["p"].erase(0);
  EXPECT_THROW(sbra::io::surrogate_from_json(j, "s"), sbra::IoError);
}

TEST(Csv, DatasetRoundTripIsExact) {
  const auto ds = sbra::frame_dataset(25, 4);
  const auto text = sbra::io::dataset_to_csv(ds);
  const auto back = sbra::io::dataset_from_csv(text, "d", sbra::frame_marginals());
  EXPECT_EQ(back.inputs_phys, ds.inputs_phys);
  EXPECT_EQ(back.responses, ds.responses);
  EXPECT_LT((back.inputs_std - ds.inputs_std).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(sbra::io::dataset_to_csv(back), text);
}

TEST(Csv, WithoutMarginalsColumnsAreStandard) {
  const auto ds = sbra::io::dataset_from_csv("x1,x2,y_re,y_im\n0.5,-1,2,3\n", "d", std::nullopt);
  EXPECT_EQ(ds.inputs_std(0, 1), -1.0);
  EXPECT_EQ(ds.responses(0), cd(2, 3));
}

TEST(Csv, MalformedRowNamesTheRow) {
  try {
    sbra::io::dataset_from_csv("x1,y_re,y_im\n1,2,3\n4,oops,6\n", "data.csv", std::nullopt);
    FAIL() << "expected a parse error";
  } catch (const sbra::IoError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("y_re"), std::string::npos) << msg;
  }
  EXPECT_THROW(sbra::io::dataset_from_csv("x1,y_re,y_im\n1,2\n", "d", std::nullopt), sbra::IoError);
  EXPECT_THROW(sbra::io::dataset_from_csv("a,b,c\n1,2,3\n", "d", std::nullopt), sbra::IoError);
  EXPECT_THROW(sbra::io::dataset_from_csv("", "d", std::nullopt), sbra::IoError);
}

TEST(Csv, PredictionsFlagPoles) {
  sbra::Prediction p;
  p.values.resize(2);
  p.values << cd(1.5, -2), cd(std::nan(""), std::nan(""));
  p.near_pole = {1};
  EXPECT_EQ(sbra::io::predictions_to_csv(p), "y_re,y_im,flag\n1.5,-2,0\nnan,nan,1\n");
}

TEST(Files, MissingFileIsIoError) {
  EXPECT_THROW(sbra::io::read_text("/nonexistent/sbra/file.csv"), sbra::IoError);
}

}  // namespace
