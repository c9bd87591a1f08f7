#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "gfm4ga/checkpoint.h"
#include "gfm4ga/dataset_io.h"
#include "gfm4ga/synth.h"
#include "helpers.h"

using namespace gfm4ga;

namespace {

bool bit_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!bit_equal(a.data()[i], b.data()[i])) return false;
  return true;
}

Model sample_model(std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const PreparedGraph g = testing::random_graph(rng, 12, 5, 3, 0.3);
  Model m;
  m.estimator = make_estimator(fit_pca(g.features, 3), 6, rng);
  m.estimator.error_min = 0.1 / 3.0;
  m.estimator.error_max = std::sqrt(2.0);
  m.encoder = EncoderParams::initialize(
      {.dims = {5, 7, 4}, .relations = {0, 2, 5}, .deviation_hidden = 3,
       .symmetric_normalization = true},
      seed);
  m.head = ContextHead::zeros(4);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < m.head.bilinear.size(); ++i)
    m.head.bilinear.data()[i] = normal(rng) * 1e-300;
  return m;
}

}  // namespace

TEST_CASE("synthetic datasets round trip bit exactly") {
  SynthConfig c;
  c.num_subgraphs = 25;
  c.feature_dim = 8;
  const Dataset data = generate_synthetic(c);
  std::stringstream buffer;
  write_dataset(data, buffer);
  const Dataset back = read_dataset(buffer);
  CHECK(back == data);
  for (std::size_t s = 0; s < data.subgraphs.size(); ++s)
    for (std::size_t v = 0; v < data.subgraphs[s].features.size(); ++v)
      for (std::size_t k = 0; k < data.subgraphs[s].features[v].size(); ++k)
        CHECK(bit_equal(data.subgraphs[s].features[v][k],
                        back.subgraphs[s].features[v][k]));
}

TEST_CASE("awkward doubles survive the dataset format") {
  Subgraph sg;
  sg.id = "edge-values";
  sg.node_ids = {-5, 1LL << 50};
  sg.features = {{-0.0, std::numeric_limits<double>::denorm_min(), 1e308},
                 {0.1 + 0.2, -std::numeric_limits<double>::max(),
                  std::nextafter(1.0, 2.0)}};
  sg.edges = {{0, 1, 3}, {1, 1, 3}};
  sg.relations = {3};
  sg.labels = std::vector<int>{0, 1};
  sg.directed = true;
  const Dataset data = Dataset::from_subgraphs({sg});
  std::stringstream buffer;
  write_dataset(data, buffer);
  const Dataset back = read_dataset(buffer);
  REQUIRE(back.subgraphs.size() == 1);
  const Subgraph& r = back.subgraphs[0];
  CHECK(r.node_ids == sg.node_ids);
  CHECK(r.edges == sg.edges);
  CHECK(r.directed);
  for (int v = 0; v < 2; ++v)
    for (int k = 0; k < 3; ++k) CHECK(bit_equal(r.features[v][k], sg.features[v][k]));
}

TEST_CASE("dataset files round trip") {
  const auto path = std::filesystem::temp_directory_path() / "gfm4ga_io_test.jsonl";
  SynthConfig c;
  c.num_subgraphs = 6;
  const Dataset data = generate_synthetic(c);
  save_dataset(data, path);
  CHECK(load_dataset(path) == data);
  std::filesystem::remove(path);
  CHECK_THROWS(load_dataset(path));
}

TEST_CASE("checkpoints round trip bit exactly") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Model m = sample_model(seed);
    std::stringstream buffer;
    write_checkpoint(m, buffer);
    const Model back = read_checkpoint(buffer);
    CHECK(back.encoder.config == m.encoder.config);
    const auto a = m.tensors(), b = back.tensors();
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(bit_equal(*a[t], *b[t]));
    CHECK(bit_equal(back.estimator.pca_basis, m.estimator.pca_basis));
    CHECK(bit_equal(Matrix(back.estimator.pca_mean), Matrix(m.estimator.pca_mean)));
    CHECK(bit_equal(back.estimator.error_min, m.estimator.error_min));
    CHECK(bit_equal(back.estimator.error_max, m.estimator.error_max));
    CHECK(back == m);
  }
}

TEST_CASE("checkpoint files and estimator files round trip") {
  const auto dir = std::filesystem::temp_directory_path();
  const Model m = sample_model(4);
  save_checkpoint(m, dir / "gfm4ga_test.ckpt");
  CHECK(load_checkpoint(dir / "gfm4ga_test.ckpt") == m);
  save_estimator(m.estimator, dir / "gfm4ga_test_est.json");
  CHECK(load_estimator(dir / "gfm4ga_test_est.json") == m.estimator);
  std::filesystem::remove(dir / "gfm4ga_test.ckpt");
  std::filesystem::remove(dir / "gfm4ga_test_est.json");
}

TEST_CASE("damaged checkpoints are rejected") {
  const Model m = sample_model(5);
  std::stringstream buffer;
  write_checkpoint(m, buffer);
  const std::string bytes = buffer.str();

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_checkpoint(truncated), std::runtime_error);

  std::stringstream empty;
  CHECK_THROWS_AS(read_checkpoint(empty), std::runtime_error);

  std::string wrong = bytes;
  wrong.replace(wrong.find("gfm4ga-checkpoint"), 6, "other-");
  std::stringstream bad_format(wrong);
  CHECK_THROWS_AS(read_checkpoint(bad_format), std::runtime_error);

  std::stringstream garbage("{not json\n");
  CHECK_THROWS_AS(read_checkpoint(garbage), std::runtime_error);
}
