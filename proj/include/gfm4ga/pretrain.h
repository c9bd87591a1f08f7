#ifndef GFM4GA_PRETRAIN_H_
#define GFM4GA_PRETRAIN_H_

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gfm4ga/encoder.h"
#include "gfm4ga/estimator.h"
#include "gfm4ga/graph.h"

namespace gfm4ga {

struct PretrainConfig {
  double temperature = 0.8;
  double alpha = 0.7;  // subgraph-level task weight
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double gamma_close = 0.1;
  double gamma_far = 0.4;
  int max_positive_pairs = 10;  // per anchor node
  int max_negative_pairs = 10;  // per anchor node
  int max_negative_subgraphs = 8;
  int refresh_period = 5;
  double epsilon = 0.4;
  int min_group_size = 3;
  int calibration_epochs = 1;  // estimator epochs interleaved per epoch
  double learning_rate_estimator = 1e-2;
  double clip_norm = 5.0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 1;

  friend bool operator==(const PretrainConfig&, const PretrainConfig&) = default;
};

// Throws std::invalid_argument when a field is out of range.
void check_config(const PretrainConfig& config);

// Cosine similarity with optional gradients. A zero-norm argument yields 0
// and zero gradients, with a one-time warning.
double cosine_similarity(const RowVector& a, const RowVector& b,
                         RowVector* grad_a = nullptr,
                         RowVector* grad_b = nullptr);

struct SubgraphContrast {
  double loss = 0.0;
  RowVector grad_anchor;
  RowVector grad_positive;
  std::vector<RowVector> grad_negatives;
};

// InfoNCE between a subgraph, its extracted group and rejected subgraphs.
SubgraphContrast subgraph_contrastive_loss(
    const RowVector& anchor, const RowVector& positive,
    std::span<const RowVector> negatives, double temperature);

struct NodePairs {
  std::vector<std::pair<int, int>> positive;  // (anchor, partner)
  std::vector<std::pair<int, int>> negative;

  friend bool operator==(const NodePairs&, const NodePairs&) = default;
};

struct PairOptions {
  double gamma_close = 0.1;
  double gamma_far = 0.4;
  double epsilon = 0.4;
  int max_positive = 10;
  int max_negative = 10;
};

// Positives: adjacent (u,l) with min(s_u,s_l) >= epsilon and
// |s_u - s_l| <= gamma_close, closest first. Negatives: non-adjacent
// (u,k), k != u, with |s_u - s_k| >= gamma_far, farthest first. Both capped
// per anchor; ties go to the smaller index.
NodePairs build_node_pairs(const PreparedGraph& graph,
                           std::span<const double> scores,
                           const PairOptions& options);

struct NodeContrast {
  double loss = 0.0;  // mean over anchors with at least one positive
  int anchors = 0;
  Matrix grad_embeddings;
};

NodeContrast node_contrastive_loss(const Matrix& embeddings,
                                   const NodePairs& pairs,
                                   double temperature);

// One subgraph's contrastive inputs for the current extraction round.
struct PretrainSample {
  const PreparedGraph* graph = nullptr;
  std::optional<PreparedGraph> group;  // induced extracted group, if accepted
  NodePairs pairs;
};

PretrainSample make_sample(const PreparedGraph& graph,
                           const EstimatorParams& estimator,
                           const PretrainConfig& config);

struct PretrainLoss {
  double total = 0.0;
  double subgraph = 0.0;
  double node = 0.0;
  int anchors = 0;
  int node_graphs = 0;
  EncoderParams grad;
};

// alpha * L_sub + (1 - alpha) * L_node over one batch, with exact encoder
// gradients. L_sub averages over anchors (samples with a group), each
// contrasted against up to max_negative_subgraphs rejected samples of the
// batch. L_node averages per-graph node losses over graphs with anchors.
PretrainLoss pretrain_loss(std::span<const PretrainSample* const> batch,
                           const EncoderParams& encoder,
                           const PretrainConfig& config);

struct EpochLoss {
  int epoch = 0;
  double total = 0.0;
  double subgraph = 0.0;
  double node = 0.0;
  int anchors = 0;
};

struct PretrainResult {
  EncoderParams encoder;
  EstimatorParams estimator;
  std::vector<EpochLoss> curve;
};

// Throws std::runtime_error when the first extraction round yields no
// anchor subgraph.
PretrainResult pretrain(std::span<const PreparedGraph> graphs,
                        EstimatorParams estimator, EncoderParams encoder,
                        const PretrainConfig& config);

}  // namespace gfm4ga

#endif  // GFM4GA_PRETRAIN_H_
