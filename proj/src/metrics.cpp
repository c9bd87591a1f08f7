#include "gfm4ga/metrics.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace gfm4ga {
namespace {

void check_lengths(std::span<const double> scores,
                   std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("metric: scores and labels differ in length");
  }
}

std::vector<std::size_t> order_by_score(std::span<const double> scores,
                                        bool descending) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return descending ? scores[a] > scores[b]
                                       : scores[a] < scores[b];
                   });
  return order;
}

}  // namespace

std::optional<double> auroc(std::span<const double> scores,
                            std::span<const int> labels) {
  check_lengths(scores, labels);
  double positives = 0, negatives = 0;
  for (int y : labels) (y ? positives : negatives) += 1;
  if (positives == 0 || negatives == 0) return std::nullopt;

  const auto order = order_by_score(scores, false);
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1..j share their average.
    const double rank = 0.5 * double(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) positive_rank_sum += rank;
    }
    i = j;
  }
  const double u = positive_rank_sum - positives * (positives + 1) / 2.0;
  return u / (positives * negatives);
}

std::optional<double> auprc(std::span<const double> scores,
                            std::span<const int> labels) {
  check_lengths(scores, labels);
  double positives = 0;
  for (int y : labels) positives += y ? 1 : 0;
  if (positives == 0) return std::nullopt;

  const auto order = order_by_score(scores, true);
  double tp = 0, fp = 0, previous_recall = 0, area = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp : fp) += 1;
      ++j;
    }
    const double recall = tp / positives;
    area += (recall - previous_recall) * (tp / (tp + fp));
    previous_recall = recall;
    i = j;
  }
  return area;
}

}  // namespace gfm4ga
