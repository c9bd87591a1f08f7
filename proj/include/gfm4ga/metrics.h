#ifndef GFM4GA_METRICS_H_
#define GFM4GA_METRICS_H_

#include <optional>
#include <span>

namespace gfm4ga {

// Probability that a random positive outranks a random negative, ties
// counted as one half. nullopt when either class is absent. Throws
// std::invalid_argument on a length mismatch.
std::optional<double> auroc(std::span<const double> scores,
                            std::span<const int> labels);

// Average precision: sum over distinct thresholds (descending) of
// (recall gain) * precision. nullopt when there are no positives.
std::optional<double> auprc(std::span<const double> scores,
                            std::span<const int> labels);

}  // namespace gfm4ga

#endif  // GFM4GA_METRICS_H_
