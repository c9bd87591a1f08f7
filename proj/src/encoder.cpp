#include "gfm4ga/encoder.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gfm4ga {
namespace {

Matrix deviation_inputs(const PreparedGraph& graph) {
  Matrix inputs(static_cast<Eigen::Index>(graph.edges.size()),
                graph.features.cols());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    inputs.row(static_cast<Eigen::Index>(e)) =
        (-(graph.features.row(edge.source) - graph.features.row(edge.target))
              .cwiseAbs())
            .array()
            .exp()
            .matrix();
  }
  return inputs;
}

}  // namespace

void check_config(const EncoderConfig& config) {
  if (config.dims.size() < 2) {
    throw std::invalid_argument("encoder: need at least one layer");
  }
  for (int d : config.dims) {
    if (d < 1) throw std::invalid_argument("encoder: dims must be positive");
  }
  if (config.relations.empty()) {
    throw std::invalid_argument("encoder: need at least one relation");
  }
  if (config.deviation_hidden < 1) {
    throw std::invalid_argument("encoder: deviation_hidden must be positive");
  }
}

EncoderParams EncoderParams::zeros(const EncoderConfig& config) {
  check_config(config);
  EncoderParams p;
  p.config = config;
  for (int l = 1; l <= config.num_layers(); ++l) {
    EncoderLayer layer;
    for (std::size_t r = 0; r < config.relations.size(); ++r) {
      layer.relation_weights.push_back(
          Matrix::Zero(config.dims[l - 1], config.dims[l]));
    }
    layer.self_weight = Matrix::Zero(config.dims[l - 1], config.dims[l]);
    p.layers.push_back(std::move(layer));
  }
  p.deviation = TwoLayerHead::zeros(config.dims[0], config.deviation_hidden);
  return p;
}

EncoderParams EncoderParams::initialize(const EncoderConfig& config,
                                        std::uint64_t seed) {
  EncoderParams p = zeros(config);
  Rng rng = make_rng(seed, 0xe4c0de);
  for (int l = 1; l <= config.num_layers(); ++l) {
    const double stddev = 1.0 / std::sqrt(double(config.dims[l - 1]));
    EncoderLayer& layer = p.layers[l - 1];
    for (Matrix& w : layer.relation_weights) {
      w = row_normalized_gaussian(config.dims[l - 1], config.dims[l], stddev,
                                  rng);
    }
    layer.self_weight = row_normalized_gaussian(config.dims[l - 1],
                                                config.dims[l], stddev, rng);
  }
  p.deviation =
      TwoLayerHead::gaussian(config.dims[0], config.deviation_hidden, rng);
  return p;
}

TensorRefs EncoderParams::tensors() {
  TensorRefs out;
  for (EncoderLayer& layer : layers) {
    for (Matrix& w : layer.relation_weights) out.push_back(&w);
    out.push_back(&layer.self_weight);
  }
  for (Matrix* t : deviation.tensors()) out.push_back(t);
  return out;
}

ConstTensorRefs EncoderParams::tensors() const {
  ConstTensorRefs out;
  for (const EncoderLayer& layer : layers) {
    for (const Matrix& w : layer.relation_weights) out.push_back(&w);
    out.push_back(&layer.self_weight);
  }
  for (const Matrix* t : deviation.tensors()) out.push_back(t);
  return out;
}

int EncoderParams::relation_slot(int relation) const {
  const auto& rels = config.relations;
  auto it = std::find(rels.begin(), rels.end(), relation);
  if (it == rels.end()) {
    throw std::invalid_argument("encoder: unknown relation id " +
                                std::to_string(relation));
  }
  return static_cast<int>(it - rels.begin());
}

double deviation_weight(const RowVector& x_u, const RowVector& x_v,
                        const TwoLayerHead& phi) {
  if (x_u.size() != x_v.size()) {
    throw std::invalid_argument("deviation_weight: dimension mismatch");
  }
  const Matrix input = (-(x_u - x_v).cwiseAbs()).array().exp().matrix();
  return phi.forward(input)(0);
}

Embeddings encode(const PreparedGraph& graph, const EncoderParams& params,
                  EncoderCache* cache) {
  const EncoderConfig& config = params.config;
  if (graph.features.cols() != config.dims[0]) {
    throw std::invalid_argument(
        "encode: feature dimension " + std::to_string(graph.features.cols()) +
        ", expected " + std::to_string(config.dims[0]));
  }
  const int num_slots = static_cast<int>(config.relations.size());
  std::vector<int> slot_of_message(graph.messages.size());
  std::vector<double> scale(graph.messages.size(), 1.0);
  std::vector<char> slot_used(num_slots, 0);
  for (std::size_t m = 0; m < graph.messages.size(); ++m) {
    const Message& msg = graph.messages[m];
    slot_of_message[m] = params.relation_slot(msg.relation);
    slot_used[slot_of_message[m]] = 1;
    if (config.symmetric_normalization) {
      scale[m] = 1.0 / std::sqrt(double(graph.degrees[msg.target] + 1) *
                                 double(graph.degrees[msg.source] + 1));
    }
  }

  EncoderCache local;
  EncoderCache& c = cache ? *cache : local;
  c = EncoderCache{};
  const Matrix dev_inputs = deviation_inputs(graph);
  c.alpha = graph.edges.empty() ? Vector()
                                : params.deviation.forward(dev_inputs,
                                                           &c.deviation);

  Embeddings out;
  out.layers.push_back(graph.features);
  for (int l = 1; l <= config.num_layers(); ++l) {
    const EncoderLayer& layer = params.layers[l - 1];
    const Matrix& h = out.layers.back();
    Matrix z = h * layer.self_weight;
    std::vector<Matrix> projected(num_slots);
    for (int s = 0; s < num_slots; ++s) {
      if (slot_used[s]) projected[s] = h * layer.relation_weights[s];
    }
    for (std::size_t m = 0; m < graph.messages.size(); ++m) {
      const Message& msg = graph.messages[m];
      z.row(msg.target) += (c.alpha(msg.edge) * scale[m]) *
                           projected[slot_of_message[m]].row(msg.source);
    }
    c.inputs.push_back(h);
    c.projected.push_back(std::move(projected));
    Matrix activated = z.cwiseMax(0.0);
    c.pre_activations.push_back(std::move(z));
    out.layers.push_back(std::move(activated));
  }
  if (graph.num_nodes() > 0) out.pooled = pool(out.layers.back());
  c.message_slot = std::move(slot_of_message);
  c.message_scale = std::move(scale);
  c.valid = true;
  return out;
}

RowVector pool(const Matrix& final_layer) {
  if (final_layer.rows() == 0) {
    throw std::invalid_argument("pool: empty graph");
  }
  return final_layer.colwise().mean();
}

EncoderParams encode_backward(const PreparedGraph& graph,
                              const EncoderParams& params,
                              const EncoderCache& cache,
                              const Matrix* grad_final,
                              const RowVector* grad_pooled) {
  if (!cache.valid) {
    throw std::logic_error("encode_backward: missing forward cache");
  }
  const EncoderConfig& config = params.config;
  const int n = graph.num_nodes();
  const int layers = config.num_layers();
  EncoderParams grads = EncoderParams::zeros(config);

  Matrix upstream = Matrix::Zero(n, config.output_dim());
  if (grad_final) upstream += *grad_final;
  if (grad_pooled && n > 0) {
    upstream.rowwise() += *grad_pooled / double(n);
  }

  Vector grad_alpha = Vector::Zero(cache.alpha.size());
  for (int l = layers; l >= 1; --l) {
    const EncoderLayer& layer = params.layers[l - 1];
    EncoderLayer& glayer = grads.layers[l - 1];
    const Matrix& h = cache.inputs[l - 1];
    const Matrix grad_z =
        (cache.pre_activations[l - 1].array() > 0.0)
            .select(upstream, Matrix::Zero(upstream.rows(), upstream.cols()));

    glayer.self_weight = h.transpose() * grad_z;
    Matrix grad_h = grad_z * layer.self_weight.transpose();

    const auto& projected = cache.projected[l - 1];
    std::vector<Matrix> grad_projected(projected.size());
    for (std::size_t s = 0; s < projected.size(); ++s) {
      if (projected[s].size() > 0) {
        grad_projected[s] = Matrix::Zero(projected[s].rows(),
                                         projected[s].cols());
      }
    }
    for (std::size_t m = 0; m < graph.messages.size(); ++m) {
      const Message& msg = graph.messages[m];
      const int slot = cache.message_slot[m];
      const double scale = cache.message_scale[m];
      grad_projected[slot].row(msg.source) +=
          (cache.alpha(msg.edge) * scale) * grad_z.row(msg.target);
      grad_alpha(msg.edge) +=
          scale * grad_z.row(msg.target).dot(projected[slot].row(msg.source));
    }
    for (std::size_t s = 0; s < projected.size(); ++s) {
      if (grad_projected[s].size() == 0) continue;
      glayer.relation_weights[s] = h.transpose() * grad_projected[s];
      grad_h += grad_projected[s] * layer.relation_weights[s].transpose();
    }
    upstream = std::move(grad_h);
  }
  if (cache.alpha.size() > 0) {
    params.deviation.backward(cache.deviation, grad_alpha, grads.deviation);
  }
  return grads;
}

}  // namespace gfm4ga
