#include <gtest/gtest.h>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scca/data.hpp"
#include "scca/synthetic.hpp"

namespace {

using scca::Index;
using scca::Matrix;
using scca::Vector;

std::string tmp_path(const std::string& name) {
  return ::testing::TempDir() + name;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a.array() == b.array()).all();
}

TEST(DatasetIo, RoundTripIsBitExact) {
  std::mt19937 engine(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<scca::PairedSample> samples;
  for (int i = 0; i < 100; ++i) {
    Vector x(3), y(2);
    for (Index j = 0; j < 3; ++j) x[j] = normal(engine);
    for (Index j = 0; j < 2; ++j) y[j] = normal(engine);
    samples.push_back({x, y});
  }
  // extreme magnitudes must survive the text round trip too
  samples[0].x << 1e-300, -1.7976931348623157e308, 4.9406564584124654e-324;
  samples[0].y << 0.1, -0.0;

  const std::string path = tmp_path("dataset_roundtrip.txt");
  scca::write_dataset(path, 3, 2, samples);
  const scca::Dataset back = scca::read_dataset(path);
  EXPECT_EQ(back.dx, 3);
  EXPECT_EQ(back.dy, 2);
  ASSERT_EQ(back.samples.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_TRUE((back.samples[i].x.array() == samples[i].x.array()).all());
    EXPECT_TRUE((back.samples[i].y.array() == samples[i].y.array()).all());
  }
}

TEST(DatasetIo, ReaderStreamsExactlyDeclaredCount) {
  const std::string path = tmp_path("dataset_stream.txt");
  std::vector<scca::PairedSample> samples;
  for (int i = 0; i < 3; ++i)
    samples.push_back({Vector::Constant(2, i), Vector::Constant(1, -i)});
  scca::write_dataset(path, 2, 1, samples);

  scca::DatasetReader reader(path);
  EXPECT_EQ(reader.dx(), 2);
  EXPECT_EQ(reader.dy(), 1);
  EXPECT_EQ(reader.count(), 3);
  for (int i = 0; i < 3; ++i) {
    const auto s = reader.next();
    ASSERT_TRUE(s.has_value());
    EXPECT_DOUBLE_EQ(s->x[0], i);
    EXPECT_DOUBLE_EQ(s->y[0], -i);
  }
  EXPECT_FALSE(reader.next().has_value());
  EXPECT_FALSE(reader.next().has_value());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

void expect_parse_error(const std::string& path, const std::string& fragment) {
  try {
    scca::read_dataset(path);
    FAIL() << "expected a parse error mentioning '" << fragment << "'";
  } catch (const scca::input_error& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos)
        << "actual message: " << e.what();
  }
}

TEST(DatasetIo, ReportsErrorsWithLineNumbers) {
  const std::string path = tmp_path("dataset_bad.txt");

  write_text(path, "");
  expect_parse_error(path, "empty dataset file");

  write_text(path, "2 1 what\n");
  expect_parse_error(path, "header");

  write_text(path, "0 1 5\n");
  expect_parse_error(path, "out of range");

  write_text(path, "2 1 2\n1 2 3\n4 5\n");
  expect_parse_error(path, ":3:");

  write_text(path, "2 1 2\n1 2 3 9\n4 5 6\n");
  expect_parse_error(path, "trailing");

  write_text(path, "2 1 5\n1 2 3\n4 5 6\n");
  expect_parse_error(path, "declares 5");

  write_text(path, "2 1 1\n1 nan 3\n");
  expect_parse_error(path, "non-finite");

  EXPECT_THROW(scca::read_dataset(tmp_path("no_such_file.txt")),
               scca::input_error);
}

TEST(TruthIo, RoundTripIsBitExact) {
  scca::GenConfig cfg;
  cfg.dx = 4;
  cfg.dy = 3;
  cfg.k_true = 2;
  cfg.rho = Vector(2);
  cfg.rho << 0.8, 0.5;
  cfg.n = 1;
  cfg.cond_x = 2.0;
  cfg.cond_y = 1.5;
  cfg.seed = 7;
  const scca::GroundTruth truth = scca::gen_synthetic(cfg).truth;

  const std::string path = tmp_path("truth_roundtrip.txt");
  scca::write_truth(path, truth);
  const scca::GroundTruth back = scca::read_truth(path);
  EXPECT_TRUE(bitwise_equal(back.c_x, truth.c_x));
  EXPECT_TRUE(bitwise_equal(back.c_y, truth.c_y));
  EXPECT_TRUE(bitwise_equal(back.c_xy, truth.c_xy));
  EXPECT_TRUE((back.rho.array() == truth.rho.array()).all());

  write_text(path, "2 2 3\n0.5 0.5 0.5\n");
  EXPECT_THROW(scca::read_truth(path), scca::input_error);
}

TEST(SolutionIo, RoundTripPreservesEverything) {
  scca::CcaSolution s;
  s.u = Matrix::Random(4, 2);
  s.v = Matrix::Random(3, 2);
  s.u_tilde = Matrix::Random(4, 2);
  s.v_tilde = Matrix::Random(3, 2);
  s.selected_count = 2;
  s.heuristic = true;

  const std::string path = tmp_path("solution_roundtrip.txt");
  scca::write_solution(path, s, 4, 3);
  const scca::SolutionFile back = scca::read_solution(path);
  EXPECT_EQ(back.dx, 4);
  EXPECT_EQ(back.dy, 3);
  EXPECT_EQ(back.solution.selected_count, 2);
  EXPECT_TRUE(back.solution.heuristic);
  EXPECT_TRUE(bitwise_equal(back.solution.u, s.u));
  EXPECT_TRUE(bitwise_equal(back.solution.v, s.v));
  EXPECT_TRUE(bitwise_equal(back.solution.u_tilde, s.u_tilde));
  EXPECT_TRUE(bitwise_equal(back.solution.v_tilde, s.v_tilde));

  s.v_tilde = Matrix::Random(3, 1);  // inconsistent with selected_count
  EXPECT_THROW(scca::write_solution(path, s, 4, 3), scca::input_error);
}

scca::GenConfig base_config() {
  scca::GenConfig cfg;
  cfg.dx = 6;
  cfg.dy = 5;
  cfg.k_true = 3;
  cfg.rho = Vector(3);
  cfg.rho << 0.8, 0.6, 0.3;
  cfg.n = 10;
  cfg.cond_x = 3.0;
  cfg.cond_y = 2.0;
  cfg.seed = 123;
  return cfg;
}

TEST(GenSynthetic, PopulationSpectrumEqualsCorrelations) {
  const scca::Synthetic syn = scca::gen_synthetic(base_config());
  const Matrix t = scca::population_T(syn.truth);
  const scca::ThinSvd svd = scca::svd_thin(t);
  EXPECT_LE((svd.values.head(3) - syn.truth.rho).cwiseAbs().maxCoeff(), 1e-8);
  for (Index i = 3; i < svd.values.size(); ++i)
    EXPECT_LE(svd.values[i], 1e-8);
}

TEST(GenSynthetic, UnitConditionGivesIdentityCovariances) {
  scca::GenConfig cfg = base_config();
  cfg.cond_x = 1.0;
  cfg.cond_y = 1.0;
  const scca::Synthetic syn = scca::gen_synthetic(cfg);
  EXPECT_LE((syn.truth.c_x - Matrix::Identity(6, 6)).norm(), 1e-12);
  EXPECT_LE((syn.truth.c_y - Matrix::Identity(5, 5)).norm(), 1e-12);
}

TEST(GenSynthetic, DeterministicPerSeed) {
  const scca::GenConfig cfg = base_config();
  const scca::Synthetic a = scca::gen_synthetic(cfg);
  const scca::Synthetic b = scca::gen_synthetic(cfg);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_TRUE((a.samples[i].x.array() == b.samples[i].x.array()).all());
    EXPECT_TRUE((a.samples[i].y.array() == b.samples[i].y.array()).all());
  }
  EXPECT_TRUE(bitwise_equal(a.truth.c_xy, b.truth.c_xy));

  scca::GenConfig other = cfg;
  other.seed = 124;
  const scca::Synthetic c = scca::gen_synthetic(other);
  EXPECT_FALSE((a.samples[0].x.array() == c.samples[0].x.array()).all());
}

TEST(GenSynthetic, EmpiricalMomentsConcentrate) {
  scca::GenConfig cfg;
  cfg.dx = 4;
  cfg.dy = 4;
  cfg.k_true = 2;
  cfg.rho = Vector(2);
  cfg.rho << 0.7, 0.4;
  cfg.n = 20000;
  cfg.cond_x = 2.0;
  cfg.cond_y = 1.5;
  cfg.seed = 99;
  const scca::Synthetic syn = scca::gen_synthetic(cfg);

  Matrix cx = Matrix::Zero(4, 4), cxy = Matrix::Zero(4, 4);
  for (const auto& s : syn.samples) {
    cx += s.x * s.x.transpose();
    cxy += s.x * s.y.transpose();
  }
  cx /= static_cast<double>(cfg.n);
  cxy /= static_cast<double>(cfg.n);
  EXPECT_LE((cx - syn.truth.c_x).norm() / syn.truth.c_x.norm(), 0.08);
  EXPECT_LE((cxy - syn.truth.c_xy).norm(), 0.08);
}

TEST(GenSynthetic, SortsCorrelationsDescending) {
  scca::GenConfig cfg = base_config();
  cfg.rho << 0.3, 0.8, 0.6;
  const scca::Synthetic syn = scca::gen_synthetic(cfg);
  EXPECT_DOUBLE_EQ(syn.truth.rho[0], 0.8);
  EXPECT_DOUBLE_EQ(syn.truth.rho[1], 0.6);
  EXPECT_DOUBLE_EQ(syn.truth.rho[2], 0.3);
}

TEST(GenSynthetic, ValidatesConfig) {
  scca::GenConfig cfg = base_config();
  cfg.rho[0] = 1.0;
  EXPECT_THROW(scca::gen_synthetic(cfg), scca::input_error);
  cfg = base_config();
  cfg.rho[2] = 0.0;
  EXPECT_THROW(scca::gen_synthetic(cfg), scca::input_error);
  cfg = base_config();
  cfg.k_true = 2;  // rho still has 3 entries
  EXPECT_THROW(scca::gen_synthetic(cfg), scca::input_error);
  cfg = base_config();
  cfg.k_true = 6;
  cfg.rho = Vector::Constant(6, 0.5);
  EXPECT_THROW(scca::gen_synthetic(cfg), scca::input_error);
  cfg = base_config();
  cfg.n = 0;
  EXPECT_THROW(scca::gen_synthetic(cfg), scca::input_error);
  cfg = base_config();
  cfg.cond_x = 0.9;
  EXPECT_THROW(scca::gen_synthetic(cfg), scca::input_error);
}

}  // namespace
