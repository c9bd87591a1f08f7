#include "gfm4ga/pretrain.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gfm4ga/parallel.h"

namespace gfm4ga {
namespace {

std::once_flag zero_norm_warning;

// Softmax of `logits`, computed against their log-sum-exp.
std::vector<double> softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - lse);
  }
  return p;
}

}  // namespace

void check_config(const PretrainConfig& config) {
  if (!(config.temperature > 0)) {
    throw std::invalid_argument("pretrain: temperature must be positive");
  }
  if (config.alpha < 0 || config.alpha > 1) {
    throw std::invalid_argument("pretrain: alpha must lie in [0,1]");
  }
  if (!(config.gamma_close < config.gamma_far)) {
    throw std::invalid_argument("pretrain: gamma_close must be < gamma_far");
  }
  if (config.batch_size < 1 || config.refresh_period < 1 ||
      config.epochs < 0) {
    throw std::invalid_argument(
        "pretrain: batch_size and refresh_period must be positive");
  }
}

double cosine_similarity(const RowVector& a, const RowVector& b,
                         RowVector* grad_a, RowVector* grad_b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    std::call_once(zero_norm_warning, [] {
      log_warning("cosine similarity of a zero-norm embedding set to 0");
    });
    if (grad_a) *grad_a = RowVector::Zero(a.size());
    if (grad_b) *grad_b = RowVector::Zero(b.size());
    return 0.0;
  }
  const double c = a.dot(b) / (na * nb);
  if (grad_a) *grad_a = b / (na * nb) - (c / (na * na)) * a;
  if (grad_b) *grad_b = a / (na * nb) - (c / (nb * nb)) * b;
  return c;
}

SubgraphContrast subgraph_contrastive_loss(
    const RowVector& anchor, const RowVector& positive,
    std::span<const RowVector> negatives, double temperature) {
  SubgraphContrast out;
  const std::size_t m = negatives.size();
  std::vector<double> logits(m + 1);
  std::vector<RowVector> ga(m + 1), gb(m + 1);
  logits[0] = cosine_similarity(anchor, positive, &ga[0], &gb[0]) /
              temperature;
  for (std::size_t j = 0; j < m; ++j) {
    logits[j + 1] =
        cosine_similarity(anchor, negatives[j], &ga[j + 1], &gb[j + 1]) /
        temperature;
  }
  out.loss = log_sum_exp(logits) - logits[0];
  const std::vector<double> p = softmax(logits);

  // d loss / d logit_0 = p_0 - 1, d loss / d logit_j = p_j.
  const double g0 = (p[0] - 1.0) / temperature;
  out.grad_anchor = g0 * ga[0];
  out.grad_positive = g0 * gb[0];
  out.grad_negatives.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double gj = p[j + 1] / temperature;
    out.grad_anchor += gj * ga[j + 1];
    out.grad_negatives[j] = gj * gb[j + 1];
  }
  return out;
}

NodePairs build_node_pairs(const PreparedGraph& graph,
                           std::span<const double> scores,
                           const PairOptions& options) {
  const int n = graph.num_nodes();
  if (static_cast<int>(scores.size()) != n) {
    throw std::invalid_argument("build_node_pairs: score count mismatch");
  }
  NodePairs pairs;
  std::vector<std::pair<double, int>> candidates;
  for (int u = 0; u < n; ++u) {
    candidates.clear();
    if (scores[u] >= options.epsilon) {
      for (int l : graph.neighbors[u]) {
        const double gap = std::abs(scores[u] - scores[l]);
        if (scores[l] >= options.epsilon && gap <= options.gamma_close) {
          candidates.emplace_back(gap, l);
        }
      }
    }
    std::sort(candidates.begin(), candidates.end());
    const int take_pos = std::min<int>(options.max_positive,
                                       static_cast<int>(candidates.size()));
    for (int i = 0; i < take_pos; ++i) {
      pairs.positive.emplace_back(u, candidates[i].second);
    }

    candidates.clear();
    for (int k = 0; k < n; ++k) {
      if (k == u || graph.adjacent(u, k)) continue;
      const double gap = std::abs(scores[u] - scores[k]);
      if (gap >= options.gamma_far) candidates.emplace_back(-gap, k);
    }
    std::sort(candidates.begin(), candidates.end());
    const int take_neg = std::min<int>(options.max_negative,
                                       static_cast<int>(candidates.size()));
    for (int i = 0; i < take_neg; ++i) {
      pairs.negative.emplace_back(u, candidates[i].second);
    }
  }
  return pairs;
}

NodeContrast node_contrastive_loss(const Matrix& embeddings,
                                   const NodePairs& pairs,
                                   double temperature) {
  NodeContrast out;
  out.grad_embeddings = Matrix::Zero(embeddings.rows(), embeddings.cols());
  std::map<int, std::vector<int>> positives, negatives;
  for (auto [u, l] : pairs.positive) positives[u].push_back(l);
  for (auto [u, k] : pairs.negative) negatives[u].push_back(k);
  if (positives.empty()) return out;

  const double inv_anchors = 1.0 / double(positives.size());
  for (const auto& [u, pos] : positives) {
    ++out.anchors;
    auto neg_it = negatives.find(u);
    if (neg_it == negatives.end() || neg_it->second.empty()) continue;
    const std::vector<int>& neg = neg_it->second;

    const RowVector hu = embeddings.row(u);
    std::vector<int> partners(pos);
    partners.insert(partners.end(), neg.begin(), neg.end());
    std::vector<double> logits(partners.size());
    std::vector<RowVector> gu(partners.size()), gv(partners.size());
    for (std::size_t i = 0; i < partners.size(); ++i) {
      logits[i] = cosine_similarity(hu, embeddings.row(partners[i]), &gu[i],
                                    &gv[i]) /
                  temperature;
    }
    const std::span<const double> pos_logits(logits.data(), pos.size());
    const double loss = log_sum_exp(logits) - log_sum_exp(pos_logits);
    out.loss += loss * inv_anchors;

    const std::vector<double> p_all = softmax(logits);
    const std::vector<double> p_pos = softmax(pos_logits);
    for (std::size_t i = 0; i < partners.size(); ++i) {
      double g = p_all[i];
      if (i < pos.size()) g -= p_pos[i];
      g *= inv_anchors / temperature;
      out.grad_embeddings.row(u) += g * gu[i];
      out.grad_embeddings.row(partners[i]) += g * gv[i];
    }
  }
  return out;
}

PretrainSample make_sample(const PreparedGraph& graph,
                           const EstimatorParams& estimator,
                           const PretrainConfig& config) {
  PretrainSample sample;
  sample.graph = &graph;
  const Vector scores = score_nodes(estimator, graph);
  const auto group = extract_group(
      graph, as_span(scores),
      {.epsilon = config.epsilon, .min_size = config.min_group_size,
       .edge_weight = std::nullopt});
  if (group) {
    sample.group = induced_subgraph(graph, group->nodes);
  }
  sample.pairs = build_node_pairs(
      graph, as_span(scores),
      {.gamma_close = config.gamma_close,
       .gamma_far = config.gamma_far,
       .epsilon = config.epsilon,
       .max_positive = config.max_positive_pairs,
       .max_negative = config.max_negative_pairs});
  return sample;
}

PretrainLoss pretrain_loss(std::span<const PretrainSample* const> batch,
                           const EncoderParams& encoder,
                           const PretrainConfig& config) {
  const std::size_t b = batch.size();
  struct Encoded {
    EncoderCache cache;
    Embeddings embeddings;
    EncoderCache group_cache;
    Embeddings group_embeddings;
  };
  std::vector<Encoded> encoded(b);
  parallel_for(b, [&](std::size_t i) {
    encoded[i].embeddings =
        encode(*batch[i]->graph, encoder, &encoded[i].cache);
    if (batch[i]->group) {
      encoded[i].group_embeddings =
          encode(*batch[i]->group, encoder, &encoded[i].group_cache);
    }
  });

  PretrainLoss out;
  std::vector<RowVector> grad_pooled(b), grad_group_pooled(b);
  std::vector<Matrix> grad_final(b);
  const int dim = encoder.config.output_dim();
  for (std::size_t i = 0; i < b; ++i) {
    grad_pooled[i] = RowVector::Zero(dim);
    grad_group_pooled[i] = RowVector::Zero(dim);
  }

  std::vector<std::size_t> anchors, rejected;
  for (std::size_t i = 0; i < b; ++i) {
    (batch[i]->group ? anchors : rejected).push_back(i);
  }
  out.anchors = static_cast<int>(anchors.size());

  if (!anchors.empty()) {
    const double weight = config.alpha / double(anchors.size());
    const std::size_t take = std::min<std::size_t>(
        rejected.size(),
        static_cast<std::size_t>(std::max(0, config.max_negative_subgraphs)));
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      const std::size_t i = anchors[a];
      std::vector<std::size_t> chosen;
      std::vector<RowVector> negatives;
      for (std::size_t j = 0; j < take; ++j) {
        const std::size_t r = rejected[(a + j) % rejected.size()];
        chosen.push_back(r);
        negatives.push_back(encoded[r].embeddings.pooled);
      }
      const SubgraphContrast term = subgraph_contrastive_loss(
          encoded[i].embeddings.pooled, encoded[i].group_embeddings.pooled,
          negatives, config.temperature);
      out.subgraph += term.loss / double(anchors.size());
      grad_pooled[i] += weight * term.grad_anchor;
      grad_group_pooled[i] += weight * term.grad_positive;
      for (std::size_t j = 0; j < chosen.size(); ++j) {
        grad_pooled[chosen[j]] += weight * term.grad_negatives[j];
      }
    }
  }

  std::vector<NodeContrast> node_terms(b);
  for (std::size_t i = 0; i < b; ++i) {
    node_terms[i] =
        node_contrastive_loss(encoded[i].embeddings.final_layer(),
                              batch[i]->pairs, config.temperature);
    if (node_terms[i].anchors > 0) ++out.node_graphs;
  }
  for (std::size_t i = 0; i < b; ++i) {
    if (node_terms[i].anchors == 0) continue;
    out.node += node_terms[i].loss / double(out.node_graphs);
    grad_final[i] = ((1.0 - config.alpha) / double(out.node_graphs)) *
                    node_terms[i].grad_embeddings;
  }
  out.total = config.alpha * out.subgraph + (1.0 - config.alpha) * out.node;

  std::vector<EncoderParams> grads(b);
  std::vector<std::optional<EncoderParams>> group_grads(b);
  parallel_for(b, [&](std::size_t i) {
    grads[i] = encode_backward(*batch[i]->graph, encoder, encoded[i].cache,
                               grad_final[i].size() ? &grad_final[i] : nullptr,
                               &grad_pooled[i]);
    if (batch[i]->group) {
      group_grads[i] =
          encode_backward(*batch[i]->group, encoder, encoded[i].group_cache,
                          nullptr, &grad_group_pooled[i]);
    }
  });
  out.grad = EncoderParams::zeros(encoder.config);
  for (std::size_t i = 0; i < b; ++i) {
    add_scaled(out.grad.tensors(),
               static_cast<const EncoderParams&>(grads[i]).tensors(), 1.0);
    if (group_grads[i]) {
      add_scaled(out.grad.tensors(),
                 static_cast<const EncoderParams&>(*group_grads[i]).tensors(),
                 1.0);
    }
  }
  return out;
}

PretrainResult pretrain(std::span<const PreparedGraph> graphs,
                        EstimatorParams estimator, EncoderParams encoder,
                        const PretrainConfig& config) {
  check_config(config);
  if (graphs.empty()) {
    throw std::invalid_argument("pretrain: no unlabeled subgraphs");
  }
  PretrainResult result;
  Optimizer optimizer(config.optimizer, config.learning_rate);
  Rng rng = make_rng(config.seed, 0x9e7a1);
  std::vector<PretrainSample> samples(graphs.size());
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch % config.refresh_period == 0) {
      parallel_for(graphs.size(), [&](std::size_t i) {
        samples[i] = make_sample(graphs[i], estimator, config);
      });
      const auto accepted = std::count_if(
          samples.begin(), samples.end(),
          [](const PretrainSample& s) { return s.group.has_value(); });
      if (epoch == 0 && accepted == 0) {
        throw std::runtime_error(
            "pretrain: no subgraph yields an extracted group (epsilon=" +
            std::to_string(config.epsilon) + ", min size=" +
            std::to_string(config.min_group_size) +
            "); nothing to contrast");
      }
    }
    std::shuffle(order.begin(), order.end(), rng);

    EpochLoss epoch_loss{.epoch = epoch};
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const PretrainSample*> batch;
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back(&samples[order[k]]);
      }
      PretrainLoss loss = pretrain_loss(batch, encoder, config);
      clip_global_norm(loss.grad.tensors(), config.clip_norm);
      optimizer.step(encoder.tensors(),
                static_cast<const EncoderParams&>(loss.grad).tensors());
      epoch_loss.total += loss.total;
      epoch_loss.subgraph += loss.subgraph;
      epoch_loss.node += loss.node;
      epoch_loss.anchors += loss.anchors;
      ++batches;
    }
    if (batches > 0) {
      epoch_loss.total /= batches;
      epoch_loss.subgraph /= batches;
      epoch_loss.node /= batches;
    }
    result.curve.push_back(epoch_loss);

    if (config.calibration_epochs > 0) {
      estimator = calibrate_estimator(
          std::move(estimator), graphs,
          {.epochs = config.calibration_epochs,
           .learning_rate = config.learning_rate_estimator,
           .seed = config.seed * 1000003ULL + static_cast<std::uint64_t>(epoch)});
    }
  }
  result.encoder = std::move(encoder);
  result.estimator = std::move(estimator);
  return result;
}

}  // namespace gfm4ga
