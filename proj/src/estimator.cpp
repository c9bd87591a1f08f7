#include "gfm4ga/estimator.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gfm4ga {

PcaFit fit_pca(const Matrix& rows, int components) {
  const int d = static_cast<int>(rows.cols());
  if (components < 1 || components > d) {
    throw std::invalid_argument("fit_pca: components " +
                                std::to_string(components) +
                                " outside [1, " + std::to_string(d) + "]");
  }
  if (rows.rows() < components) {
    throw std::invalid_argument("fit_pca: fewer rows than components");
  }
  PcaFit fit;
  fit.mean = rows.colwise().mean().transpose();
  const Matrix centered = rows.rowwise() - fit.mean.transpose();
  const double denom = rows.rows() > 1 ? double(rows.rows() - 1) : 1.0;
  const Matrix covariance = (centered.transpose() * centered) / denom;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("fit_pca: eigendecomposition failed");
  }
  // Eigen returns ascending order.
  fit.eigenvalues = solver.eigenvalues().reverse();
  fit.basis.resize(d, components);
  for (int k = 0; k < components; ++k) {
    Vector v = solver.eigenvectors().col(d - 1 - k);
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v(pivot) < 0) v = -v;
    fit.basis.col(k) = v;
  }
  const Vector err = reconstruction_error(fit.mean, fit.basis, rows);
  fit.error_min = err.minCoeff();
  fit.error_max = err.maxCoeff();
  return fit;
}

int default_components(const Vector& eigenvalues) {
  const int d = static_cast<int>(eigenvalues.size());
  const double total = eigenvalues.cwiseMax(0.0).sum();
  int explaining = d;
  if (total > 0) {
    double acc = 0.0;
    for (int k = 0; k < d; ++k) {
      acc += std::max(0.0, eigenvalues(k));
      if (acc >= 0.9 * total) {
        explaining = k + 1;
        break;
      }
    }
  }
  return std::max(1, std::min({d, 16, explaining}));
}

Matrix stack_features(std::span<const PreparedGraph> graphs) {
  Eigen::Index rows = 0;
  Eigen::Index cols = graphs.empty() ? 0 : graphs.front().features.cols();
  for (const auto& g : graphs) {
    if (g.features.cols() != cols) {
      throw std::invalid_argument("stack_features: feature dims differ");
    }
    rows += g.features.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& g : graphs) {
    out.middleRows(at, g.features.rows()) = g.features;
    at += g.features.rows();
  }
  return out;
}

EstimatorParams make_estimator(const PcaFit& pca, int scorer_hidden,
                               Rng& rng) {
  EstimatorParams p;
  p.pca_mean = pca.mean;
  p.pca_basis = pca.basis;
  p.error_min = pca.error_min;
  p.error_max = pca.error_max;
  p.scorer = TwoLayerHead::gaussian(static_cast<int>(pca.basis.cols()) + 1,
                                    scorer_hidden, rng);
  return p;
}

Matrix project(const EstimatorParams& params, const Matrix& features) {
  if (features.cols() != params.pca_mean.size()) {
    throw std::invalid_argument(
        "estimator: feature dimension " + std::to_string(features.cols()) +
        ", expected " + std::to_string(params.pca_mean.size()));
  }
  return (features.rowwise() - params.pca_mean.transpose()) *
         params.pca_basis;
}

Vector reconstruction_error(const Vector& mean, const Matrix& basis,
                            const Matrix& features) {
  const Matrix centered = features.rowwise() - mean.transpose();
  const Matrix residual =
      centered - (centered * basis) * basis.transpose();
  return residual.rowwise().squaredNorm();
}

Matrix scorer_inputs(const EstimatorParams& params, const Matrix& features) {
  const Matrix z = project(params, features);
  const Vector err =
      reconstruction_error(params.pca_mean, params.pca_basis, features);
  const double range = params.error_max - params.error_min;
  Matrix out(z.rows(), z.cols() + 1);
  out.leftCols(z.cols()) = z;
  if (range > 0.0) {
    out.col(z.cols()) = (err.array() - params.error_min) / range;
  } else {
    out.col(z.cols()).setZero();
  }
  return out;
}

Vector score_nodes(const EstimatorParams& params, const Matrix& features,
                   TwoLayerHead::Cache* cache) {
  return params.scorer.forward(scorer_inputs(params, features), cache);
}

void score_backward(const EstimatorParams& params,
                    const TwoLayerHead::Cache& cache,
                    const Vector& grad_scores, TwoLayerHead& grads) {
  params.scorer.backward(cache, grad_scores, grads);
}

Vector calibration_targets(const EstimatorParams& params,
                           const Matrix& features) {
  Vector err =
      reconstruction_error(params.pca_mean, params.pca_basis, features);
  if (err.size() == 0) return err;
  const double lo = err.minCoeff();
  const double hi = err.maxCoeff();
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
    return Vector::Zero(err.size());
  }
  return (err.array() - lo) / (hi - lo);
}

EstimatorParams calibrate_estimator(EstimatorParams params,
                                    std::span<const PreparedGraph> graphs,
                                    const CalibrationOptions& options,
                                    std::vector<double>* loss_curve) {
  const Matrix features = stack_features(graphs);
  if (features.rows() == 0) {
    throw std::invalid_argument("calibrate_estimator: empty dataset");
  }
  if (options.epochs <= 0) return params;

  const Matrix projected = scorer_inputs(params, features);
  const Vector targets = calibration_targets(params, features);
  const Eigen::Index n = projected.rows();
  const Eigen::Index batch =
      std::max<Eigen::Index>(1, std::min<Eigen::Index>(options.batch_size, n));

  Rng rng = make_rng(options.seed, 0xca11b);
  Adam adam({.learning_rate = options.learning_rate});
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  TwoLayerHead grads =
      TwoLayerHead::zeros(params.scorer.input_dim(),
                          params.scorer.hidden_dim());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index m = std::min(batch, n - start);
      Matrix inputs(m, projected.cols());
      Vector y(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        inputs.row(i) = projected.row(order[start + i]);
        y(i) = targets(order[start + i]);
      }
      TwoLayerHead::Cache cache;
      const Vector out = params.scorer.forward(inputs, &cache);
      const Vector diff = out - y;
      epoch_loss += diff.squaredNorm();
      set_zero(grads.tensors());
      params.scorer.backward(cache, (2.0 / double(m)) * diff, grads);
      adam.step(params.scorer.tensors(),
                static_cast<const TwoLayerHead&>(grads).tensors());
    }
    if (loss_curve) loss_curve->push_back(epoch_loss / double(n));
  }
  return params;
}

double default_edge_weight(const PreparedGraph& graph) {
  std::size_t max_degree = 0;
  for (const auto& nb : graph.neighbors) {
    max_degree = std::max(max_degree, nb.size());
  }
  return max_degree == 0 ? 0.0 : 1.0 / double(max_degree);
}

double density_objective(const PreparedGraph& graph,
                         std::span<const double> scores,
                         std::span<const int> subset, double edge_weight) {
  if (subset.empty()) return 0.0;
  std::vector<char> in(graph.num_nodes(), 0);
  for (int v : subset) in[v] = 1;
  double mass = 0.0;
  std::size_t twice_edges = 0;
  for (int v : subset) {
    mass += scores[v];
    for (int w : graph.neighbors[v]) twice_edges += in[w];
  }
  return (mass + edge_weight * double(twice_edges / 2)) /
         double(subset.size());
}

PeelTrace peel(const PreparedGraph& graph, std::span<const double> scores,
               double edge_weight) {
  const int n = graph.num_nodes();
  if (static_cast<int>(scores.size()) != n) {
    throw std::invalid_argument("peel: score count does not match nodes");
  }
  std::vector<char> alive(n, 1);
  std::vector<int> inner_degree(n);
  double mass = 0.0;
  std::size_t edges = 0;
  for (int v = 0; v < n; ++v) {
    inner_degree[v] = static_cast<int>(graph.neighbors[v].size());
    mass += scores[v];
    edges += graph.neighbors[v].size();
  }
  edges /= 2;

  PeelTrace trace;
  trace.initial_objective =
      n == 0 ? 0.0 : (mass + edge_weight * double(edges)) / double(n);
  for (int size = n; size > 0; --size) {
    int pick = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int v = 0; v < n; ++v) {
      if (!alive[v]) continue;
      const double contribution = scores[v] + edge_weight * inner_degree[v];
      if (contribution < best) {
        best = contribution;
        pick = v;
      }
    }
    alive[pick] = 0;
    mass -= scores[pick];
    edges -= static_cast<std::size_t>(inner_degree[pick]);
    for (int w : graph.neighbors[pick]) {
      if (alive[w]) --inner_degree[w];
    }
    const int remaining = size - 1;
    trace.steps.push_back(
        {pick, remaining == 0
                   ? 0.0
                   : (mass + edge_weight * double(edges)) / double(remaining)});
  }
  return trace;
}

std::vector<std::vector<int>> connected_components(
    const PreparedGraph& graph, std::span<const int> subset) {
  std::vector<char> in(graph.num_nodes(), 0);
  for (int v : subset) in[v] = 1;
  std::vector<char> seen(graph.num_nodes(), 0);
  std::vector<int> sorted(subset.begin(), subset.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::vector<int>> components;
  for (int start : sorted) {
    if (seen[start]) continue;
    std::vector<int> component{start};
    seen[start] = 1;
    for (std::size_t i = 0; i < component.size(); ++i) {
      for (int w : graph.neighbors[component[i]]) {
        if (in[w] && !seen[w]) {
          seen[w] = 1;
          component.push_back(w);
        }
      }
    }
    std::sort(component.begin(), component.end());
    components.push_back(std::move(component));
  }
  std::stable_sort(components.begin(), components.end(),
                   [](const auto& a, const auto& b) {
                     return a.size() > b.size();
                   });
  return components;
}

std::optional<ExtractedGroup> extract_group(const PreparedGraph& graph,
                                            std::span<const double> scores,
                                            const ExtractionOptions& options) {
  const int n = graph.num_nodes();
  const int min_size = std::max(1, options.min_size);
  if (n < min_size) return std::nullopt;
  const double lambda =
      options.edge_weight.value_or(default_edge_weight(graph));
  PeelTrace trace = peel(graph, scores, lambda);

  // State k has the first k steps applied, leaving n - k nodes.
  int best_state = 0;
  double best = trace.initial_objective;
  for (int k = 1; n - k >= min_size; ++k) {
    if (trace.steps[k - 1].objective > best) {
      best = trace.steps[k - 1].objective;
      best_state = k;
    }
  }
  std::vector<char> alive(n, 1);
  for (int k = 0; k < best_state; ++k) alive[trace.steps[k].removed] = 0;
  std::vector<int> subset;
  for (int v = 0; v < n; ++v) {
    if (alive[v]) subset.push_back(v);
  }
  auto components = connected_components(graph, subset);
  std::vector<int>& group = components.front();
  if (static_cast<int>(group.size()) < min_size) return std::nullopt;

  double total = 0.0;
  for (int v : group) total += scores[v];
  const double average = total / double(group.size());
  if (average < options.epsilon) return std::nullopt;

  ExtractedGroup out;
  out.nodes = std::move(group);
  out.average_score = average;
  out.objective = best;
  out.trace = std::move(trace);
  return out;
}

}  // namespace gfm4ga
