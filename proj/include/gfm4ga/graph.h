#ifndef GFM4GA_GRAPH_H_
#define GFM4GA_GRAPH_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfm4ga/tensor.h"

namespace gfm4ga {

struct Edge {
  int source = 0;
  int target = 0;
  int relation = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// One unit of detection: a typed multigraph over dense node indices
// 0..n-1. Original identifiers are kept in `node_ids`. Undirected edges are
// stored once.
struct Subgraph {
  std::string id;
  std::vector<std::int64_t> node_ids;
  std::vector<std::vector<double>> features;
  std::vector<Edge> edges;
  std::vector<int> relations;  // sorted, unique
  std::optional<std::vector<int>> labels;
  bool directed = false;

  int num_nodes() const { return static_cast<int>(node_ids.size()); }
  int feature_dim() const {
    return features.empty() ? 0 : static_cast<int>(features.front().size());
  }

  friend bool operator==(const Subgraph&, const Subgraph&) = default;
};

enum class SplitTag { kUnlabeled, kLabeled };

struct Dataset {
  std::vector<Subgraph> subgraphs;
  std::vector<int> relation_registry;  // sorted, unique
  std::map<std::string, SplitTag> split_tags;

  // Builds registry and split tags from the subgraphs themselves.
  static Dataset from_subgraphs(std::vector<Subgraph> subgraphs);

  std::vector<const Subgraph*> labeled() const;
  std::vector<const Subgraph*> unlabeled() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Empty iff every structural invariant holds. Each entry names the offending
// field and index.
std::vector<std::string> validate(const Subgraph& subgraph);
std::vector<std::string> validate(const Dataset& dataset);

// Incident edge count, counting both endpoints of every edge. Throws
// std::out_of_range on an invalid node index.
int degree(const Subgraph& subgraph, int node,
           std::optional<int> relation = std::nullopt);

// Induced subgraph on `nodes` (indices into `subgraph`), preserving their
// given order. Relations shrink to those present on surviving edges, or stay
// as the parent's set when no edge survives.
Subgraph induced_subgraph(const Subgraph& subgraph, std::span<const int> nodes);

// A directed message along an edge, used by message passing. Undirected
// edges expand into two messages sharing the same `edge` index.
struct Message {
  int target = 0;
  int source = 0;
  int edge = 0;
  int relation = 0;
};

// Compute-ready view of a validated subgraph: dense features, expanded
// messages, simple undirected adjacency, and multigraph degrees.
struct PreparedGraph {
  std::string id;
  std::vector<std::int64_t> node_ids;
  bool directed = false;
  Matrix features;
  std::vector<Edge> edges;
  std::vector<int> relations;
  std::vector<Message> messages;
  std::vector<std::vector<int>> neighbors;  // sorted, no self, no duplicates
  std::vector<int> degrees;
  std::optional<std::vector<int>> labels;

  int num_nodes() const { return static_cast<int>(features.rows()); }
  bool adjacent(int u, int v) const;
};

// Throws std::invalid_argument listing violations when `subgraph` is invalid.
PreparedGraph prepare(const Subgraph& subgraph);
// Induced prepared subgraph on `nodes`, in the given order.
PreparedGraph induced_subgraph(const PreparedGraph& graph,
                               std::span<const int> nodes);

std::vector<PreparedGraph> prepare_all(std::span<const Subgraph* const> graphs);

}  // namespace gfm4ga

#endif  // GFM4GA_GRAPH_H_
