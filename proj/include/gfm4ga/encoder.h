#ifndef GFM4GA_ENCODER_H_
#define GFM4GA_ENCODER_H_

#include <cstdint>
#include <vector>

#include "gfm4ga/graph.h"
#include "gfm4ga/mlp.h"
#include "gfm4ga/tensor.h"

namespace gfm4ga {

struct EncoderConfig {
  std::vector<int> dims;       // d_0 (input), d_1, ..., d_L
  std::vector<int> relations;  // relation ids, one weight slot each
  int deviation_hidden = 16;
  // Scales each message by 1/sqrt((deg_u+1)(deg_v+1)). Off by default.
  bool symmetric_normalization = false;

  int num_layers() const { return static_cast<int>(dims.size()) - 1; }
  int output_dim() const { return dims.back(); }

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct EncoderLayer {
  std::vector<Matrix> relation_weights;  // one d_{l-1} x d_l per relation
  Matrix self_weight;                    // d_{l-1} x d_l

  friend bool operator==(const EncoderLayer&, const EncoderLayer&) = default;
};

// Relational message passing with per-edge deviation weights:
//   h_u' = ReLU( sum_r sum_{v in N_r(u)} alpha_uv h_v W_r + h_u W_self )
//   alpha_uv = phi(exp(-|x_u - x_v|))
// where phi is a two-layer network with a sigmoid head, evaluated on the
// input features and shared by every layer.
struct EncoderParams {
  EncoderConfig config;
  std::vector<EncoderLayer> layers;
  TwoLayerHead deviation;

  static EncoderParams zeros(const EncoderConfig& config);
  // Gaussian weights (std 1/sqrt(d_in)) with rows normalized to unit length.
  static EncoderParams initialize(const EncoderConfig& config,
                                  std::uint64_t seed);

  // Layer by layer: relation weights in relation order, then the self
  // weight; the deviation network last.
  TensorRefs tensors();
  ConstTensorRefs tensors() const;

  // Slot of `relation` in config.relations. Throws std::invalid_argument
  // for unknown relation ids.
  int relation_slot(int relation) const;

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

void check_config(const EncoderConfig& config);

// Scalar deviation weight for a node pair, in (0, 1) and symmetric.
double deviation_weight(const RowVector& x_u, const RowVector& x_v,
                        const TwoLayerHead& phi);

struct Embeddings {
  std::vector<Matrix> layers;  // H^(0) = X, ..., H^(L)
  RowVector pooled;            // mean of H^(L) rows

  const Matrix& final_layer() const { return layers.back(); }
};

// Intermediate values kept for the backward pass.
struct EncoderCache {
  bool valid = false;
  TwoLayerHead::Cache deviation;
  Vector alpha;                          // per stored edge
  std::vector<int> message_slot;         // relation slot per message
  std::vector<double> message_scale;     // normalization per message
  std::vector<Matrix> inputs;            // H^(l-1) per layer
  std::vector<Matrix> pre_activations;   // per layer
  std::vector<std::vector<Matrix>> projected;  // H^(l-1) W_r per layer, slot
};

Embeddings encode(const PreparedGraph& graph, const EncoderParams& params,
                  EncoderCache* cache = nullptr);

// Mean of the final-layer rows. Throws std::invalid_argument when empty.
RowVector pool(const Matrix& final_layer);

// Exact gradients of every encoder tensor given upstream gradients on
// H^(L) and/or the pooled vector (either may be null). Throws
// std::logic_error without a valid forward cache.
EncoderParams encode_backward(const PreparedGraph& graph,
                              const EncoderParams& params,
                              const EncoderCache& cache,
                              const Matrix* grad_final,
                              const RowVector* grad_pooled);

}  // namespace gfm4ga

#endif  // GFM4GA_ENCODER_H_
