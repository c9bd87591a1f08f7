#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gfm4ga/estimator.h"
#include "helpers.h"
#include "oracles.h"

using namespace gfm4ga;

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix; eigenvalues
// returned in descending order with matching columns.
void jacobi_eigen(Matrix a, Vector& values, Matrix& vectors) {
  const int n = static_cast<int>(a.rows());
  vectors = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return a(x, x) > a(y, y); });
  Matrix sorted(n, n);
  values.resize(n);
  for (int i = 0; i < n; ++i) {
    values(i) = a(order[i], order[i]);
    sorted.col(i) = vectors.col(order[i]);
  }
  vectors = sorted;
}

Matrix covariance_oracle(const Matrix& rows) {
  const int n = static_cast<int>(rows.rows());
  const int d = static_cast<int>(rows.cols());
  Vector mean = Vector::Zero(d);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) mean(c) += rows(r, c) / n;
  Matrix cov = Matrix::Zero(d, d);
  for (int r = 0; r < n; ++r)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        cov(i, j) += (rows(r, i) - mean(i)) * (rows(r, j) - mean(j)) / (n - 1);
  return cov;
}

PreparedGraph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  Subgraph sg;
  sg.id = "g";
  for (int v = 0; v < n; ++v) {
    sg.node_ids.push_back(v);
    sg.features.push_back({0.0});
  }
  for (auto [u, v] : edges) sg.edges.push_back({u, v, 0});
  sg.relations = {0};
  return prepare(sg);
}


}  // namespace

TEST_CASE("pca on a 5x3 hand matrix matches a Jacobi oracle") {
  Matrix x(5, 3);
  x << 2.0, 0.5, 1.0,
       1.0, 1.5, -0.5,
       -1.0, 0.0, 2.0,
       0.5, -2.0, 1.5,
       3.0, 1.0, 0.0;
  const PcaFit fit = fit_pca(x, 3);
  Vector values;
  Matrix vectors;
  jacobi_eigen(covariance_oracle(x), values, vectors);
  for (int k = 0; k < 3; ++k) {
    CHECK(fit.eigenvalues(k) == doctest::Approx(values(k)).epsilon(1e-10));
    // eigenvectors agree up to sign
    const double dot = fit.basis.col(k).dot(vectors.col(k));
    CHECK(std::abs(std::abs(dot) - 1.0) < 1e-8);
  }
  CHECK(fit.eigenvalues(0) >= fit.eigenvalues(1));
  CHECK(fit.eigenvalues(1) >= fit.eigenvalues(2));
}

TEST_CASE("pca basis is orthonormal and sign normalized") {
  Rng rng = make_rng(5);
  std::normal_distribution<double> normal;
  Matrix x(40, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  const PcaFit fit = fit_pca(x, 4);
  const Matrix gram = fit.basis.transpose() * fit.basis;
  CHECK((gram - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
  for (int k = 0; k < 4; ++k) {
    Eigen::Index pivot;
    fit.basis.col(k).cwiseAbs().maxCoeff(&pivot);
    CHECK(fit.basis(pivot, k) > 0);
  }
}

TEST_CASE("rank one data is reconstructed exactly by one component") {
  Matrix x(6, 3);
  for (int r = 0; r < 6; ++r) {
    const double t = r - 2.5;
    x.row(r) << 1.0 + 2.0 * t, -1.0 + t, 0.5 - 3.0 * t;
  }
  const PcaFit fit = fit_pca(x, 1);
  Vector dir(3);
  dir << 2.0, 1.0, -3.0;
  dir.normalize();
  CHECK(std::abs(std::abs(fit.basis.col(0).dot(dir)) - 1.0) < 1e-10);
  CHECK(reconstruction_error(fit.mean, fit.basis, x).maxCoeff() < 1e-20);
}

TEST_CASE("full rank pca reconstructs isotropic samples") {
  Rng rng = make_rng(7);
  std::normal_distribution<double> normal;
  Matrix x(50, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  const PcaFit fit = fit_pca(x, 5);
  CHECK(reconstruction_error(fit.mean, fit.basis, x).maxCoeff() < 1e-10);
}

TEST_CASE("pca argument errors") {
  Matrix x = Matrix::Ones(4, 3);
  CHECK_THROWS_AS(fit_pca(x, 4), std::invalid_argument);
  CHECK_THROWS_AS(fit_pca(x, 0), std::invalid_argument);
  CHECK_THROWS_AS(fit_pca(Matrix::Ones(2, 3), 3), std::invalid_argument);
}

TEST_CASE("default component count") {
  Vector flat = Vector::Ones(64);
  CHECK(default_components(flat) == 16);
  Vector steep(5);
  steep << 10.0, 0.5, 0.3, 0.1, 0.1;
  CHECK(default_components(steep) == 1);
  Vector two(4);
  two << 5.0, 4.0, 0.5, 0.5;
  CHECK(default_components(two) == 2);
}

TEST_CASE("zero scorer gives one half everywhere") {
  Rng rng = make_rng(1);
  Matrix x = Matrix::Random(10, 4);
  EstimatorParams p = make_estimator(fit_pca(x, 2), 8, rng);
  set_zero(p.scorer.tensors());
  const Vector s = score_nodes(p, x);
  for (Eigen::Index i = 0; i < s.size(); ++i) CHECK(s(i) == 0.5);
}

TEST_CASE("scores match hand arithmetic on a two node toy") {
  EstimatorParams p;
  p.pca_mean = Vector::Zero(2);
  p.pca_basis = Matrix::Identity(2, 1);  // keep the first coordinate
  p.error_min = 0.0;
  p.error_max = 4.0;
  p.scorer = TwoLayerHead::zeros(2, 1);
  p.scorer.w1 << 0.5, -1.0;
  p.scorer.b1 << 0.1;
  p.scorer.w2 << 2.0;
  p.scorer.b2 << -0.3;
  Matrix x(2, 2);
  x << 1.0, 1.0,
       -2.0, 0.5;
  const Vector s = score_nodes(p, x);
  for (int r = 0; r < 2; ++r) {
    const double z = x(r, 0);
    const double err = x(r, 1) * x(r, 1) / 4.0;
    const double h = std::tanh(0.5 * z - 1.0 * err + 0.1);
    const double expected = 1.0 / (1.0 + std::exp(-(2.0 * h - 0.3)));
    CHECK(std::abs(s(r) - expected) < 1e-12);
  }
}

TEST_CASE("identical features get identical scores and scoring is permutation equivariant") {
  Rng rng = make_rng(2);
  Matrix x = Matrix::Random(12, 5);
  x.row(3) = x.row(7);
  EstimatorParams p = make_estimator(fit_pca(x, 3), 8, rng);
  const Vector s = score_nodes(p, x);
  CHECK(s(3) == s(7));
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(12);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 12, rng);
  const Vector permuted = score_nodes(p, perm * x);
  CHECK((permuted - perm * s).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    CHECK(s(i) > 0.0);
    CHECK(s(i) < 1.0);
  }
}

TEST_CASE("scoring rejects a feature dimension mismatch") {
  Rng rng = make_rng(2);
  Matrix x = Matrix::Random(6, 3);
  EstimatorParams p = make_estimator(fit_pca(x, 2), 4, rng);
  CHECK_THROWS_AS(score_nodes(p, Matrix::Random(2, 4)), std::invalid_argument);
}

TEST_CASE("calibration with zero epochs leaves parameters unchanged") {
  Rng rng = make_rng(9);
  const PreparedGraph g = testing::random_graph(rng, 12, 4, 1, 0.3);
  std::vector<PreparedGraph> graphs{g};
  EstimatorParams p = make_estimator(fit_pca(g.features, 2), 8, rng);
  CHECK(calibrate_estimator(p, graphs, {.epochs = 0}) == p);
}

TEST_CASE("identical nodes calibrate toward a constant low score") {
  Subgraph sg;
  sg.id = "flat";
  for (int v = 0; v < 20; ++v) {
    sg.node_ids.push_back(v);
    sg.features.push_back({1.0, 2.0, 3.0});
  }
  sg.relations = {0};
  std::vector<PreparedGraph> graphs{prepare(sg)};
  Rng rng = make_rng(1);
  EstimatorParams p = make_estimator(fit_pca(graphs[0].features, 1), 4, rng);
  CHECK(calibration_targets(p, graphs[0].features) == Vector::Zero(20));
  std::vector<double> curve;
  p = calibrate_estimator(p, graphs, {.epochs = 200, .batch_size = 20,
                                      .learning_rate = 0.05}, &curve);
  CHECK(curve.back() < curve.front());
  CHECK(score_nodes(p, graphs[0]).maxCoeff() < 0.1);
}

TEST_CASE("a far outlier gets the maximal calibrated score") {
  Rng rng = make_rng(4);
  std::normal_distribution<double> normal;
  Subgraph sg;
  sg.id = "outlier";
  for (int v = 0; v < 50; ++v) {
    sg.node_ids.push_back(v);
    std::vector<double> row(6);
    for (double& x : row) x = normal(rng) * (1.0 + 3.0 * (&x == &row[0]));
    sg.features.push_back(row);
  }
  for (int k = 1; k < 6; ++k) sg.features[17][k] += 8.0;
  sg.relations = {0};
  std::vector<PreparedGraph> graphs{prepare(sg)};
  EstimatorParams p = make_estimator(fit_pca(graphs[0].features, 1), 16, rng);
  const Vector targets = calibration_targets(p, graphs[0].features);
  Eigen::Index target_arg;
  targets.maxCoeff(&target_arg);
  REQUIRE(target_arg == 17);
  std::vector<double> curve;
  p = calibrate_estimator(p, graphs, {.epochs = 300, .batch_size = 50,
                                      .learning_rate = 0.02}, &curve);
  CHECK(curve.back() < curve.front());
  Eigen::Index arg;
  score_nodes(p, graphs[0]).maxCoeff(&arg);
  CHECK(arg == 17);
}

TEST_CASE("peel trace objectives match recomputation") {
  Rng rng = make_rng(21);
  std::uniform_real_distribution<double> unit;
  for (int trial = 0; trial < 100; ++trial) {
    const PreparedGraph g = testing::random_graph(rng, 3 + trial % 12, 1, 2, 0.35);
    std::vector<double> scores(g.num_nodes());
    for (double& s : scores) s = unit(rng);
    const double lambda = unit(rng);
    const PeelTrace trace = peel(g, scores, lambda);
    REQUIRE(static_cast<int>(trace.steps.size()) == g.num_nodes());
    std::vector<int> alive(g.num_nodes());
    for (int v = 0; v < g.num_nodes(); ++v) alive[v] = v;
    CHECK(std::abs(trace.initial_objective -
                   density_objective(g, scores, alive, lambda)) < 1e-10);
    for (const PeelStep& step : trace.steps) {
      alive.erase(std::find(alive.begin(), alive.end(), step.removed));
      CHECK(std::abs(step.objective -
                     density_objective(g, scores, alive, lambda)) < 1e-10);
    }
  }
}

TEST_CASE("extraction on a hand graph picks the dense high scoring clique") {
  // Triangle 0-1-2 with high scores, tail 2-3-4-5 with low scores.
  const PreparedGraph g =
      graph_from_edges(6, {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}, {4, 5}});
  const std::vector<double> scores = {0.9, 0.8, 0.85, 0.1, 0.2, 0.1};
  const auto group = extract_group(g, scores, {.epsilon = 0.4, .min_size = 3,
                                               .edge_weight = std::nullopt});
  REQUIRE(group.has_value());
  CHECK(group->nodes == std::vector<int>{0, 1, 2});
  CHECK(group->average_score == doctest::Approx(0.85));
}

TEST_CASE("extraction gates") {
  const PreparedGraph g =
      graph_from_edges(5, {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}});
  const std::vector<double> zeros(5, 0.0);
  CHECK_FALSE(extract_group(g, zeros, {}).has_value());

  Rng rng = make_rng(33);
  std::uniform_real_distribution<double> below(0.0, 0.399);
  for (int trial = 0; trial < 200; ++trial) {
    const PreparedGraph r = testing::random_graph(rng, 3 + trial % 8, 1, 1, 0.5);
    std::vector<double> s(r.num_nodes());
    for (double& x : s) x = below(rng);
    CHECK_FALSE(extract_group(r, s, {}).has_value());
  }
}

TEST_CASE("accepted groups satisfy size, average and connectivity") {
  Rng rng = make_rng(34);
  std::uniform_real_distribution<double> unit;
  int accepted = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const PreparedGraph g = testing::random_graph(rng, 3 + trial % 10, 1, 1, 0.3);
    std::vector<double> s(g.num_nodes());
    for (double& x : s) x = unit(rng);
    const auto group = extract_group(g, s, {});
    if (!group) continue;
    ++accepted;
    CHECK(group->nodes.size() >= 3);
    CHECK(group->average_score >= 0.4);
    CHECK(oracle::connected(g, group->nodes));
  }
  CHECK(accepted > 50);
}

TEST_CASE("greedy peeling reaches half the exhaustive optimum") {
  Rng rng = make_rng(35);
  std::uniform_real_distribution<double> unit;
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const PreparedGraph g = testing::random_graph(rng, 3 + trial % 8, 1, 1, 0.4);
    const int n = g.num_nodes();
    std::vector<double> s(n);
    for (double& x : s) x = unit(rng);
    const double lambda = trial % 2 ? default_edge_weight(g) : 0.0;
    const double optimum = oracle::best_connected_density(g, s, 3, lambda);
    if (optimum < 0) continue;
    ++compared;
    CHECK(oracle::best_peeled_density(peel(g, s, lambda), n, 3) >=
          0.5 * optimum);
  }
  CHECK(compared > 100);
}

TEST_CASE("density objective matches the oracle") {
  Rng rng = make_rng(36);
  std::uniform_real_distribution<double> unit;
  for (int trial = 0; trial < 100; ++trial) {
    const PreparedGraph g = testing::random_graph(rng, 2 + trial % 8, 1, 2, 0.5);
    std::vector<double> s(g.num_nodes());
    for (double& x : s) x = unit(rng);
    std::vector<int> subset;
    for (int v = 0; v < g.num_nodes(); ++v)
      if (unit(rng) < 0.6) subset.push_back(v);
    if (subset.empty()) continue;
    const double lambda = unit(rng);
    CHECK(std::abs(density_objective(g, s, subset, lambda) -
                   oracle::density(g, s, subset, lambda)) < 1e-12);
  }
}

TEST_CASE("connected components are ordered largest first") {
  const PreparedGraph g = graph_from_edges(7, {{0, 1}, {2, 3}, {3, 4}, {5, 6}});
  const std::vector<int> all = {0, 1, 2, 3, 4, 5, 6};
  const auto comps = connected_components(g, all);
  REQUIRE(comps.size() == 3);
  CHECK(comps[0] == std::vector<int>{2, 3, 4});
  CHECK(comps[1] == std::vector<int>{0, 1});
  CHECK(comps[2] == std::vector<int>{5, 6});
}
