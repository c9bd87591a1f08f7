#ifndef GFM4GA_FINETUNE_H_
#define GFM4GA_FINETUNE_H_

#include <span>
#include <vector>

#include "gfm4ga/encoder.h"
#include "gfm4ga/estimator.h"
#include "gfm4ga/graph.h"

namespace gfm4ga {

// Bilinear context scorer: s_hat_u = sigmoid(h_u^T W h_u^ctx).
struct ContextHead {
  Matrix bilinear;  // d_L x d_L

  static ContextHead zeros(int dim) { return {Matrix::Zero(dim, dim)}; }

  TensorRefs tensors() { return {&bilinear}; }
  ConstTensorRefs tensors() const { return {&bilinear}; }

  friend bool operator==(const ContextHead&, const ContextHead&) = default;
};

// Everything needed for prediction.
struct Model {
  EstimatorParams estimator;
  EncoderParams encoder;
  ContextHead head;

  // Scorer, then encoder, then context head.
  TensorRefs tensors();
  ConstTensorRefs tensors() const;

  friend bool operator==(const Model&, const Model&) = default;
};

// Model with every trainable tensor zeroed and the same shapes.
Model zeros_like(const Model& model);

struct PartWeights {
  double positive = 0.0;
  double negative = 0.0;
  double subgraph = 0.0;  // e^{1/|V|}
  double positive_degree = 0.0;
  double negative_degree = 0.0;
};

// W_part = e^{1/|V|} * (-log(|part| / |V|)) * meanDegree(part), and 0 for an
// empty part.
PartWeights part_weights(const PreparedGraph& graph,
                         std::span<const int> labels);

// Mean node score. Throws std::invalid_argument when empty.
double subgraph_score(std::span<const double> scores);

enum class ContextMode { kHigh, kLow };

// Top-k 1-hop neighbors of `node`. kHigh ranks by
// (1-|s_u-s_v|)(1-|d_u-d_v|/(d_u+d_v)), kLow by |s_u-s_v||d_u-d_v|/(d_u+d_v),
// both descending with ties to the smaller index.
std::vector<int> select_context(int node, const PreparedGraph& graph,
                                std::span<const double> scores, int k,
                                ContextMode mode);

// Mean of the context rows of `embeddings`; the node's own row when the
// context is empty.
RowVector context_embedding(int node, std::span<const int> context,
                            const Matrix& embeddings);

Vector refine_scores(const Matrix& embeddings, const Matrix& context,
                     const ContextHead& head);
Vector combine(const Vector& scores, const Vector& refined);

struct PredictOptions {
  double epsilon = 0.4;
  int context_size = 10;
  bool use_context = true;
};

struct Prediction {
  Vector raw;     // estimator scores
  Vector final;   // combined scores (== raw when not refined)
  bool refined = false;
};

// Subgraphs with mean raw score <= epsilon (or with contexts disabled) keep
// the raw scores.
Prediction predict(const PreparedGraph& graph, const Model& model,
                   const PredictOptions& options);

struct FinetuneConfig {
  int epochs = 30;
  double learning_rate = 1e-3;
  int context_size = 10;
  double epsilon = 0.4;
  double fc_weight = 1.0;
  bool node_weights = true;   // false: W_p = W_n = 1
  bool group_context = true;  // false: final scores = raw scores
  double clamp = 1e-7;
  double clip_norm = 5.0;
  OptimizerKind optimizer = OptimizerKind::kGradientDescent;

  friend bool operator==(const FinetuneConfig&, const FinetuneConfig&) = default;

  PredictOptions predict_options() const {
    return {.epsilon = epsilon,
            .context_size = context_size,
            .use_context = group_context};
  }
};

struct FinetuneLoss {
  double total = 0.0;
  double weighted_bce = 0.0;  // L_GA
  double constraint = 0.0;    // L_FC, already scaled by fc_weight
  Model grad;
};

// L_GA + fc_weight * (||Theta - Theta_pre|| + ||Phi - Phi_pre||), with
// exact gradients for scorer, encoder and context head. L_GA is the
// part-weighted node BCE summed within each subgraph and averaged over the
// batch.
FinetuneLoss finetune_loss(std::span<const PreparedGraph* const> batch,
                           const Model& model, const Model& pretrained,
                           const FinetuneConfig& config);

// Full-batch updates (config.optimizer) on finetune_loss starting from `pretrained` with a zero
// context head. Throws std::invalid_argument on an empty or unlabeled batch.
Model finetune(const Model& pretrained,
               std::span<const PreparedGraph* const> shots,
               const FinetuneConfig& config,
               std::vector<double>* loss_curve = nullptr);

}  // namespace gfm4ga

#endif  // GFM4GA_FINETUNE_H_
