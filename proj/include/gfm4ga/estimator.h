#ifndef GFM4GA_ESTIMATOR_H_
#define GFM4GA_ESTIMATOR_H_

#include <optional>
#include <span>
#include <vector>

#include "gfm4ga/graph.h"
#include "gfm4ga/mlp.h"
#include "gfm4ga/tensor.h"

namespace gfm4ga {

struct PcaFit {
  Vector mean;
  Matrix basis;        // d x p, orthonormal columns
  Vector eigenvalues;  // all d eigenvalues, nonincreasing
  double error_min = 0.0;  // reconstruction error range over the fitted rows
  double error_max = 0.0;
};

// Top-`components` eigenvectors of the sample covariance of `rows`.
PcaFit fit_pca(const Matrix& rows, int components);

// min(d, 16, smallest count explaining 90% of the variance).
int default_components(const Vector& eigenvalues);

// Stacks the feature rows of every graph.
Matrix stack_features(std::span<const PreparedGraph> graphs);

// Node anomaly estimator: PCA projection followed by a small scorer.
struct EstimatorParams {
  Vector pca_mean;
  Matrix pca_basis;
  // Range used to rescale the reconstruction error fed to the scorer.
  double error_min = 0.0;
  double error_max = 0.0;
  TwoLayerHead scorer;  // input: p coordinates, then the rescaled error

  int feature_dim() const { return static_cast<int>(pca_mean.size()); }
  int components() const { return static_cast<int>(pca_basis.cols()); }

  // Trainable tensors: the scorer only. The projection stays fixed.
  TensorRefs tensors() { return scorer.tensors(); }
  ConstTensorRefs tensors() const { return scorer.tensors(); }

  friend bool operator==(const EstimatorParams&,
                         const EstimatorParams&) = default;
};

inline constexpr int kDefaultScorerHidden = 16;

EstimatorParams make_estimator(const PcaFit& pca, int scorer_hidden, Rng& rng);

// Centered projection onto the PCA basis, one row per node.
Matrix project(const EstimatorParams& params, const Matrix& features);
// Squared residual of the rank-p reconstruction, per row.
Vector reconstruction_error(const Vector& mean, const Matrix& basis,
                            const Matrix& features);

// Scorer input rows: PCA coordinates followed by the reconstruction error
// rescaled by [error_min, error_max] (0 when that range is empty).
Matrix scorer_inputs(const EstimatorParams& params, const Matrix& features);

// Per-node anomaly probability. Throws std::invalid_argument on a feature
// dimension mismatch.
Vector score_nodes(const EstimatorParams& params, const Matrix& features,
                   TwoLayerHead::Cache* cache = nullptr);
inline Vector score_nodes(const EstimatorParams& params,
                          const PreparedGraph& graph,
                          TwoLayerHead::Cache* cache = nullptr) {
  return score_nodes(params, graph.features, cache);
}

// Accumulates scorer gradients for upstream gradient `grad_scores`.
void score_backward(const EstimatorParams& params,
                    const TwoLayerHead::Cache& cache,
                    const Vector& grad_scores, TwoLayerHead& grads);

struct CalibrationOptions {
  int epochs = 30;
  int batch_size = 256;
  double learning_rate = 1e-2;
  std::uint64_t seed = 1;

  friend bool operator==(const CalibrationOptions&, const CalibrationOptions&) = default;
};

// Regresses the scorer toward each node's min-max normalized reconstruction
// error over `graphs` (mean squared error, minibatch Adam). Appends the mean
// epoch loss to `loss_curve` when given.
EstimatorParams calibrate_estimator(EstimatorParams params,
                                    std::span<const PreparedGraph> graphs,
                                    const CalibrationOptions& options,
                                    std::vector<double>* loss_curve = nullptr);

// Normalized reconstruction error targets used by calibration.
Vector calibration_targets(const EstimatorParams& params,
                           const Matrix& features);

struct PeelStep {
  int removed = 0;
  double objective = 0.0;  // objective of the remaining set
};

struct PeelTrace {
  double initial_objective = 0.0;
  std::vector<PeelStep> steps;  // n steps, the last empties the set
};

struct ExtractedGroup {
  std::vector<int> nodes;  // sorted node indices
  double average_score = 0.0;
  double objective = 0.0;
  PeelTrace trace;
};

struct ExtractionOptions {
  double epsilon = 0.4;
  int min_size = 3;
  // Edge-mass weight; defaults to 1 / max degree of the simple graph.
  std::optional<double> edge_weight;
};

double default_edge_weight(const PreparedGraph& graph);

// (sum of scores + lambda * internal simple edges) / |subset|.
double density_objective(const PreparedGraph& graph,
                         std::span<const double> scores,
                         std::span<const int> subset, double edge_weight);

// Greedy peeling: repeatedly removes the node with the smallest marginal
// contribution score + lambda * internal degree (ties to the smaller index).
PeelTrace peel(const PreparedGraph& graph, std::span<const double> scores,
               double edge_weight);

// Best peeled subset of size >= min_size, restricted to its largest
// connected component, accepted iff the component still has min_size nodes
// and mean score >= epsilon.
std::optional<ExtractedGroup> extract_group(const PreparedGraph& graph,
                                            std::span<const double> scores,
                                            const ExtractionOptions& options);

// Connected components of `subset` in the simple graph, largest first (ties
// broken by smallest member).
std::vector<std::vector<int>> connected_components(
    const PreparedGraph& graph, std::span<const int> subset);

}  // namespace gfm4ga

#endif  // GFM4GA_ESTIMATOR_H_
