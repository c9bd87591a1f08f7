#ifndef GFM4GA_TESTS_HELPERS_H_
#define GFM4GA_TESTS_HELPERS_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gfm4ga/encoder.h"
#include "gfm4ga/graph.h"
#include "gfm4ga/tensor.h"

namespace gfm4ga::testing {

// Random undirected multigraph over `n` nodes with Gaussian features. Every
// relation id in 0..relations-1 is declared.
inline Subgraph random_subgraph(Rng& rng, int n, int d, int relations,
                                double edge_probability, bool labeled = false,
                                bool directed = false) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> rel(0, relations - 1);
  Subgraph sg;
  sg.id = "g" + std::to_string(rng() % 100000);
  sg.directed = directed;
  for (int v = 0; v < n; ++v) {
    sg.node_ids.push_back(v);
    std::vector<double> row(d);
    for (double& x : row) x = normal(rng);
    sg.features.push_back(row);
  }
  for (int u = 0; u < n; ++u) {
    for (int v = directed ? 0 : u + 1; v < n; ++v) {
      if (u != v && unit(rng) < edge_probability) {
        sg.edges.push_back({u, v, rel(rng)});
      }
    }
  }
  for (int r = 0; r < relations; ++r) sg.relations.push_back(r);
  if (labeled) {
    std::vector<int> labels(n);
    for (int& y : labels) y = unit(rng) < 0.4 ? 1 : 0;
    sg.labels = labels;
  }
  return sg;
}

inline PreparedGraph random_graph(Rng& rng, int n, int d, int relations,
                                  double edge_probability, bool labeled = false,
                                  bool directed = false) {
  return prepare(random_subgraph(rng, n, d, relations, edge_probability,
                                 labeled, directed));
}

struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst;  // "tensor t entry i"
};

// Central finite differences over every entry of `params`, compared with
// `analytic`. Relative error per entry uses max(|a|, |n|, 1e-6) as the
// denominator.
inline GradientCheck check_gradients(const TensorRefs& params,
                                     const ConstTensorRefs& analytic,
                                     const std::function<double()>& loss,
                                     double step = 1e-5) {
  GradientCheck out;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = *params[t];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + step;
      const double up = loss();
      p.data()[i] = saved - step;
      const double down = loss();
      p.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[t]->data()[i];
      const double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), 1e-6});
      if (rel > out.max_relative_error) {
        out.max_relative_error = rel;
        out.worst = "tensor " + std::to_string(t) + " entry " +
                    std::to_string(i) + " analytic " + std::to_string(a) +
                    " numeric " + std::to_string(numeric);
      }
    }
  }
  return out;
}

// Smallest |pre-activation| over every encoder layer; draws too close to the
// ReLU kink make finite differences meaningless.
inline double relu_margin(const PreparedGraph& graph,
                          const EncoderParams& params) {
  EncoderCache cache;
  encode(graph, params, &cache);
  double margin = 1e300;
  for (const Matrix& z : cache.pre_activations) {
    if (z.size() > 0) margin = std::min(margin, z.cwiseAbs().minCoeff());
  }
  return margin;
}

}  // namespace gfm4ga::testing

#endif  // GFM4GA_TESTS_HELPERS_H_
