#ifndef GFM4GA_SYNTH_H_
#define GFM4GA_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gfm4ga/graph.h"

namespace gfm4ga {

enum class AnomalyPattern { kDense, kChain, kMixed };

std::string to_string(AnomalyPattern pattern);
AnomalyPattern parse_pattern(const std::string& text);

struct SynthConfig {
  int num_subgraphs = 200;
  double size_mean = 25.0;
  double size_std = 5.0;
  int feature_dim = 64;
  AnomalyPattern pattern = AnomalyPattern::kMixed;
  double group_size_mean = 8.0;
  double group_size_std = 2.0;
  // L2 length of the shift added to every group member's features.
  double feature_shift = 4.0;
  double inner_density = 0.6;
  double camouflage_rate = 0.1;
  int num_relations = 2;
  int backbone_attachment = 2;  // preferential-attachment edges per node
  double labeled_fraction = 0.25;
  double group_rate = 1.0;  // fraction of subgraphs carrying a group
  std::uint64_t seed = 1;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

// Throws std::invalid_argument naming the offending field.
void check_config(const SynthConfig& config);

// Benign preferential-attachment backbone plus one injected anomaly group
// per subgraph (dense: inner edges at inner_density; chain: a path),
// camouflage edges from members to benign nodes, and member features shifted
// along a random unit direction shared by the group. Subgraph i draws its
// randomness from (seed, i) only.
Dataset generate_synthetic(const SynthConfig& config);

// A whole labeled graph to cut group subgraphs from.
struct BaseGraph {
  std::vector<std::int64_t> node_ids;
  std::vector<std::vector<double>> features;
  std::vector<Edge> edges;  // dense indices
  std::vector<int> labels;
  bool directed = false;
};

// Edge file: "u v rel" per line (tab or space separated). Label file:
// "node label" per line. Optional feature file: "node f1 f2 ..." per line;
// without one every node gets its base degree as a single feature.
BaseGraph load_base_graph(const std::filesystem::path& edges,
                          const std::filesystem::path& labels,
                          const std::optional<std::filesystem::path>& features,
                          bool directed = false);

struct SampleConfig {
  int min_interconnected = 3;
  double dedup_threshold = 0.8;  // Jaccard over node sets
  double hop_fraction = 0.6;     // share of each hop's frontier kept
  std::uint64_t seed = 1;
};

// Induced 2-hop neighborhoods around anomaly nodes that contain a connected
// anomaly component of at least min_interconnected nodes; near duplicates
// (Jaccard > dedup_threshold with an emitted set) are dropped. All output
// subgraphs are labeled. A base without anomalies yields an empty dataset.
Dataset sample_group_subgraphs(const BaseGraph& base,
                               const SampleConfig& config);

struct KShotSplit {
  int shots = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> finetune_ids;
  std::vector<std::string> eval_ids;  // remaining labeled ids, dataset order
};

// One uniform without-replacement split per seed. Throws
// std::invalid_argument when k exceeds the labeled count or is below 1.
std::vector<KShotSplit> make_kshot_splits(const Dataset& dataset, int k,
                                          const std::vector<std::uint64_t>& seeds);

}  // namespace gfm4ga

#endif  // GFM4GA_SYNTH_H_
