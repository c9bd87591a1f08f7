#include "gfm4ga/finetune.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gfm4ga/parallel.h"

namespace gfm4ga {

TensorRefs Model::tensors() {
  TensorRefs out = estimator.tensors();
  for (Matrix* t : encoder.tensors()) out.push_back(t);
  for (Matrix* t : head.tensors()) out.push_back(t);
  return out;
}

ConstTensorRefs Model::tensors() const {
  ConstTensorRefs out = estimator.tensors();
  for (const Matrix* t : encoder.tensors()) out.push_back(t);
  for (const Matrix* t : head.tensors()) out.push_back(t);
  return out;
}

Model zeros_like(const Model& model) {
  Model z = model;
  set_zero(z.tensors());
  return z;
}

PartWeights part_weights(const PreparedGraph& graph,
                         std::span<const int> labels) {
  const int n = graph.num_nodes();
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("part_weights: label count mismatch");
  }
  PartWeights w;
  if (n == 0) return w;
  w.subgraph = std::exp(1.0 / double(n));
  int count[2] = {0, 0};
  double degree_sum[2] = {0.0, 0.0};
  for (int v = 0; v < n; ++v) {
    const int y = labels[v] != 0 ? 1 : 0;
    ++count[y];
    degree_sum[y] += graph.degrees[v];
  }
  const auto weight = [&](int part, double* mean_degree) {
    if (count[part] == 0) {
      *mean_degree = 0.0;
      return 0.0;
    }
    *mean_degree = degree_sum[part] / double(count[part]);
    if (count[part] == n) return 0.0;
    const double proportion = double(count[part]) / double(n);
    return w.subgraph * (-std::log(proportion)) * *mean_degree;
  };
  w.positive = weight(1, &w.positive_degree);
  w.negative = weight(0, &w.negative_degree);
  return w;
}

double subgraph_score(std::span<const double> scores) {
  if (scores.empty()) {
    throw std::invalid_argument("subgraph_score: empty score vector");
  }
  return std::accumulate(scores.begin(), scores.end(), 0.0) /
         double(scores.size());
}

std::vector<int> select_context(int node, const PreparedGraph& graph,
                                std::span<const double> scores, int k,
                                ContextMode mode) {
  if (node < 0 || node >= graph.num_nodes()) {
    throw std::out_of_range("select_context: node index out of range");
  }
  std::vector<std::pair<double, int>> ranked;
  const double du = graph.degrees[node];
  for (int v : graph.neighbors[node]) {
    const double dv = graph.degrees[v];
    const double score_gap = std::abs(scores[node] - scores[v]);
    const double degree_gap = std::abs(du - dv) / (du + dv);
    const double key = mode == ContextMode::kHigh
                           ? (1.0 - score_gap) * (1.0 - degree_gap)
                           : score_gap * degree_gap;
    ranked.emplace_back(-key, v);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<int> out;
  for (std::size_t i = 0; i < ranked.size() && static_cast<int>(i) < k; ++i) {
    out.push_back(ranked[i].second);
  }
  return out;
}

RowVector context_embedding(int node, std::span<const int> context,
                            const Matrix& embeddings) {
  if (context.empty()) return embeddings.row(node);
  RowVector sum = RowVector::Zero(embeddings.cols());
  for (int v : context) sum += embeddings.row(v);
  return sum / double(context.size());
}

Vector refine_scores(const Matrix& embeddings, const Matrix& context,
                     const ContextHead& head) {
  if (embeddings.cols() != head.bilinear.rows() ||
      context.cols() != head.bilinear.cols() ||
      embeddings.rows() != context.rows()) {
    throw std::invalid_argument("refine_scores: dimension mismatch");
  }
  const Vector logits =
      (embeddings * head.bilinear).cwiseProduct(context).rowwise().sum();
  return logits.unaryExpr([](double x) { return sigmoid(x); });
}

Vector combine(const Vector& scores, const Vector& refined) {
  if (scores.size() != refined.size()) {
    throw std::invalid_argument("combine: length mismatch");
  }
  return 0.5 * (scores + refined);
}

namespace {

// Forward state of one subgraph through the prediction pipeline.
struct Forward {
  TwoLayerHead::Cache score_cache;
  Vector raw;
  Vector final;
  bool refined = false;
  EncoderCache encoder_cache;
  Matrix embeddings;
  std::vector<std::vector<int>> contexts;
  Matrix context;
  Vector refined_scores;
};

Forward run_forward(const PreparedGraph& graph, const Model& model,
                    const PredictOptions& options, bool keep_caches) {
  Forward f;
  f.raw = score_nodes(model.estimator, graph,
                      keep_caches ? &f.score_cache : nullptr);
  f.final = f.raw;
  if (!options.use_context || graph.num_nodes() == 0) return f;
  const double gate = subgraph_score(as_span(f.raw));
  if (!(gate > options.epsilon)) return f;

  f.refined = true;
  const Embeddings emb = encode(graph, model.encoder,
                                keep_caches ? &f.encoder_cache : nullptr);
  f.embeddings = emb.final_layer();
  const int n = graph.num_nodes();
  f.context.resize(n, f.embeddings.cols());
  f.contexts.resize(n);
  for (int u = 0; u < n; ++u) {
    const ContextMode mode =
        f.raw(u) > gate ? ContextMode::kHigh : ContextMode::kLow;
    f.contexts[u] = select_context(u, graph, as_span(f.raw),
                                   options.context_size, mode);
    f.context.row(u) = context_embedding(u, f.contexts[u], f.embeddings);
  }
  f.refined_scores = refine_scores(f.embeddings, f.context, model.head);
  f.final = combine(f.raw, f.refined_scores);
  return f;
}

}  // namespace

Prediction predict(const PreparedGraph& graph, const Model& model,
                   const PredictOptions& options) {
  Forward f = run_forward(graph, model, options, false);
  return {std::move(f.raw), std::move(f.final), f.refined};
}

FinetuneLoss finetune_loss(std::span<const PreparedGraph* const> batch,
                           const Model& model, const Model& pretrained,
                           const FinetuneConfig& config) {
  if (batch.empty()) {
    throw std::invalid_argument("finetune_loss: empty batch");
  }
  const PredictOptions options = config.predict_options();
  const double inv_batch = 1.0 / double(batch.size());
  const double lo = config.clamp;
  const double hi = 1.0 - config.clamp;

  std::vector<double> losses(batch.size(), 0.0);
  std::vector<Model> grads(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    const PreparedGraph& graph = *batch[i];
    if (!graph.labels) {
      throw std::invalid_argument("finetune: subgraph '" + graph.id +
                                  "' has no labels");
    }
    const std::vector<int>& labels = *graph.labels;
    PartWeights w{.positive = 1.0, .negative = 1.0};
    if (config.node_weights) w = part_weights(graph, labels);

    Forward f = run_forward(graph, model, options, true);
    const int n = graph.num_nodes();
    Vector grad_final = Vector::Zero(n);
    double loss = 0.0;
    for (int u = 0; u < n; ++u) {
      const double raw = f.final(u);
      const double p = std::clamp(raw, lo, hi);
      const bool inside = raw > lo && raw < hi;
      if (labels[u] == 1) {
        loss -= w.positive * std::log(p);
        if (inside) grad_final(u) = -w.positive / p;
      } else {
        loss -= w.negative * std::log(1.0 - p);
        if (inside) grad_final(u) = w.negative / (1.0 - p);
      }
    }
    losses[i] = loss * inv_batch;
    grad_final *= inv_batch;

    Model& g = grads[i];
    g = zeros_like(model);
    Vector grad_raw = grad_final;
    if (f.refined) {
      grad_raw *= 0.5;
      const Vector grad_refined = 0.5 * grad_final;
      const Vector grad_logit =
          grad_refined.cwiseProduct(f.refined_scores)
              .cwiseProduct((1.0 - f.refined_scores.array()).matrix());
      const Matrix& h = f.embeddings;
      const Matrix& ctx = f.context;
      // logit_u = h_u W ctx_u^T
      g.head.bilinear = h.transpose() * grad_logit.asDiagonal() * ctx;
      Matrix grad_h =
          grad_logit.asDiagonal() * (ctx * model.head.bilinear.transpose());
      const Matrix grad_ctx =
          grad_logit.asDiagonal() * (h * model.head.bilinear);
      for (int u = 0; u < n; ++u) {
        const auto& members = f.contexts[u];
        if (members.empty()) {
          grad_h.row(u) += grad_ctx.row(u);
        } else {
          const double share = 1.0 / double(members.size());
          for (int v : members) grad_h.row(v) += share * grad_ctx.row(u);
        }
      }
      g.encoder = encode_backward(graph, model.encoder, f.encoder_cache,
                                  &grad_h, nullptr);
    }
    score_backward(model.estimator, f.score_cache, grad_raw,
                   g.estimator.scorer);
  });

  FinetuneLoss out;
  out.grad = zeros_like(model);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.weighted_bce += losses[i];
    add_scaled(out.grad.tensors(),
               static_cast<const Model&>(grads[i]).tensors(), 1.0);
  }

  if (config.fc_weight != 0.0) {
    const auto anchor_term = [&](const ConstTensorRefs& current,
                                 const ConstTensorRefs& reference,
                                 const TensorRefs& grad) {
      const double dist = distance(current, reference);
      if (dist > 0.0) {
        for (std::size_t t = 0; t < current.size(); ++t) {
          *grad[t] += (config.fc_weight / dist) *
                      (*current[t] - *reference[t]);
        }
      }
      return dist;
    };
    out.constraint =
        config.fc_weight *
        (anchor_term(model.encoder.tensors(), pretrained.encoder.tensors(),
                     out.grad.encoder.tensors()) +
         anchor_term(model.estimator.tensors(),
                     pretrained.estimator.tensors(),
                     out.grad.estimator.tensors()));
  }
  out.total = out.weighted_bce + out.constraint;
  return out;
}

Model finetune(const Model& pretrained,
               std::span<const PreparedGraph* const> shots,
               const FinetuneConfig& config,
               std::vector<double>* loss_curve) {
  if (shots.empty()) {
    throw std::invalid_argument("finetune: empty k-shot set");
  }
  Model model = pretrained;
  model.head = ContextHead::zeros(pretrained.encoder.config.output_dim());
  Optimizer optimizer(config.optimizer, config.learning_rate);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    FinetuneLoss loss = finetune_loss(shots, model, pretrained, config);
    clip_global_norm(loss.grad.tensors(), config.clip_norm);
    optimizer.step(model.tensors(),
              static_cast<const Model&>(loss.grad).tensors());
    if (loss_curve) loss_curve->push_back(loss.total);
  }
  return model;
}

}  // namespace gfm4ga
