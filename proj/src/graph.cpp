#include "gfm4ga/graph.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gfm4ga {

Dataset Dataset::from_subgraphs(std::vector<Subgraph> subgraphs) {
  Dataset dataset;
  std::set<int> registry;
  for (const Subgraph& sg : subgraphs) {
    registry.insert(sg.relations.begin(), sg.relations.end());
    dataset.split_tags[sg.id] =
        sg.labels ? SplitTag::kLabeled : SplitTag::kUnlabeled;
  }
  dataset.relation_registry.assign(registry.begin(), registry.end());
  dataset.subgraphs = std::move(subgraphs);
  return dataset;
}

std::vector<const Subgraph*> Dataset::labeled() const {
  std::vector<const Subgraph*> out;
  for (const Subgraph& sg : subgraphs) {
    auto it = split_tags.find(sg.id);
    if (it != split_tags.end() && it->second == SplitTag::kLabeled) {
      out.push_back(&sg);
    }
  }
  return out;
}

std::vector<const Subgraph*> Dataset::unlabeled() const {
  std::vector<const Subgraph*> out;
  for (const Subgraph& sg : subgraphs) {
    auto it = split_tags.find(sg.id);
    if (it == split_tags.end() || it->second == SplitTag::kUnlabeled) {
      out.push_back(&sg);
    }
  }
  return out;
}

std::vector<std::string> validate(const Subgraph& subgraph) {
  std::vector<std::string> violations;
  const auto complain = [&](const std::string& message) {
    violations.push_back("subgraph '" + subgraph.id + "': " + message);
  };
  const int n = subgraph.num_nodes();

  if (static_cast<int>(subgraph.features.size()) != n) {
    complain("features: " + std::to_string(subgraph.features.size()) +
             " rows for " + std::to_string(n) + " nodes");
  }
  const std::size_t d = subgraph.features.empty()
                            ? 0
                            : subgraph.features.front().size();
  for (std::size_t r = 0; r < subgraph.features.size(); ++r) {
    const auto& row = subgraph.features[r];
    if (row.size() != d) {
      complain("features[" + std::to_string(r) + "]: dimension " +
               std::to_string(row.size()) + ", expected " + std::to_string(d));
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        complain("features[" + std::to_string(r) + "]: non-finite value");
        break;
      }
    }
  }

  if (!std::is_sorted(subgraph.relations.begin(), subgraph.relations.end()) ||
      std::adjacent_find(subgraph.relations.begin(),
                         subgraph.relations.end()) !=
          subgraph.relations.end()) {
    complain("relations: not a sorted set");
  }
  for (std::size_t e = 0; e < subgraph.edges.size(); ++e) {
    const Edge& edge = subgraph.edges[e];
    if (edge.source < 0 || edge.source >= n || edge.target < 0 ||
        edge.target >= n) {
      complain("edges[" + std::to_string(e) + "]: endpoint (" +
               std::to_string(edge.source) + "," +
               std::to_string(edge.target) + ") outside [0," +
               std::to_string(n) + ")");
    }
    if (!std::binary_search(subgraph.relations.begin(),
                            subgraph.relations.end(), edge.relation)) {
      complain("edges[" + std::to_string(e) + "]: relation " +
               std::to_string(edge.relation) + " not in relation set");
    }
  }

  if (subgraph.labels) {
    if (static_cast<int>(subgraph.labels->size()) != n) {
      complain("labels: length " + std::to_string(subgraph.labels->size()) +
               " for " + std::to_string(n) + " nodes");
    }
    for (std::size_t i = 0; i < subgraph.labels->size(); ++i) {
      const int y = (*subgraph.labels)[i];
      if (y != 0 && y != 1) {
        complain("labels[" + std::to_string(i) + "]: value " +
                 std::to_string(y) + " not in {0,1}");
      }
    }
  }
  return violations;
}

std::vector<std::string> validate(const Dataset& dataset) {
  std::vector<std::string> violations;
  std::set<std::string> seen;
  for (const Subgraph& sg : dataset.subgraphs) {
    auto sub = validate(sg);
    violations.insert(violations.end(), sub.begin(), sub.end());
    if (!seen.insert(sg.id).second) {
      violations.push_back("subgraph '" + sg.id + "': duplicate id");
    }
    for (int r : sg.relations) {
      if (!std::binary_search(dataset.relation_registry.begin(),
                              dataset.relation_registry.end(), r)) {
        violations.push_back("subgraph '" + sg.id + "': relation " +
                             std::to_string(r) + " missing from registry");
      }
    }
    auto tag = dataset.split_tags.find(sg.id);
    if (tag == dataset.split_tags.end()) {
      violations.push_back("subgraph '" + sg.id + "': no split tag");
    } else if ((tag->second == SplitTag::kLabeled) != sg.labels.has_value()) {
      violations.push_back("subgraph '" + sg.id +
                           "': split tag disagrees with label presence");
    }
  }
  return violations;
}

int degree(const Subgraph& subgraph, int node, std::optional<int> relation) {
  if (node < 0 || node >= subgraph.num_nodes()) {
    throw std::out_of_range("degree: node index " + std::to_string(node) +
                            " outside [0," +
                            std::to_string(subgraph.num_nodes()) + ")");
  }
  int count = 0;
  for (const Edge& e : subgraph.edges) {
    if (relation && e.relation != *relation) continue;
    if (e.source == node) ++count;
    if (e.target == node) ++count;
  }
  return count;
}

Subgraph induced_subgraph(const Subgraph& subgraph,
                          std::span<const int> nodes) {
  const int n = subgraph.num_nodes();
  std::vector<int> remap(n, -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < 0 || nodes[i] >= n) {
      throw std::out_of_range("induced_subgraph: node index out of range");
    }
    remap[nodes[i]] = static_cast<int>(i);
  }
  Subgraph out;
  out.id = subgraph.id;
  out.directed = subgraph.directed;
  for (int v : nodes) {
    out.node_ids.push_back(subgraph.node_ids[v]);
    out.features.push_back(subgraph.features[v]);
  }
  std::set<int> relations;
  for (const Edge& e : subgraph.edges) {
    const int s = remap[e.source];
    const int t = remap[e.target];
    if (s < 0 || t < 0) continue;
    out.edges.push_back({s, t, e.relation});
    relations.insert(e.relation);
  }
  out.relations = relations.empty()
                      ? subgraph.relations
                      : std::vector<int>(relations.begin(), relations.end());
  if (subgraph.labels) {
    std::vector<int> labels;
    for (int v : nodes) labels.push_back((*subgraph.labels)[v]);
    out.labels = std::move(labels);
  }
  return out;
}

bool PreparedGraph::adjacent(int u, int v) const {
  const auto& nb = neighbors[u];
  return std::binary_search(nb.begin(), nb.end(), v);
}

PreparedGraph prepare(const Subgraph& subgraph) {
  const auto violations = validate(subgraph);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "invalid subgraph:";
    for (const auto& v : violations) msg << "\n  " << v;
    throw std::invalid_argument(msg.str());
  }
  PreparedGraph g;
  g.id = subgraph.id;
  g.node_ids = subgraph.node_ids;
  g.directed = subgraph.directed;
  const int n = subgraph.num_nodes();
  const int d = subgraph.feature_dim();
  g.features.resize(n, d);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) g.features(r, c) = subgraph.features[r][c];
  }
  g.edges = subgraph.edges;
  g.relations = subgraph.relations;
  g.labels = subgraph.labels;
  g.neighbors.assign(n, {});
  g.degrees.assign(n, 0);
  for (std::size_t e = 0; e < subgraph.edges.size(); ++e) {
    const Edge& edge = subgraph.edges[e];
    const int idx = static_cast<int>(e);
    g.messages.push_back({edge.target, edge.source, idx, edge.relation});
    if (!subgraph.directed && edge.source != edge.target) {
      g.messages.push_back({edge.source, edge.target, idx, edge.relation});
    }
    ++g.degrees[edge.source];
    ++g.degrees[edge.target];
    if (edge.source != edge.target) {
      g.neighbors[edge.source].push_back(edge.target);
      g.neighbors[edge.target].push_back(edge.source);
    }
  }
  for (auto& nb : g.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

PreparedGraph induced_subgraph(const PreparedGraph& graph,
                               std::span<const int> nodes) {
  Subgraph whole;
  whole.id = graph.id;
  whole.node_ids = graph.node_ids;
  whole.directed = graph.directed;
  whole.features.resize(graph.num_nodes());
  for (int v = 0; v < graph.num_nodes(); ++v) {
    const RowVector row = graph.features.row(v);
    whole.features[v].assign(row.data(), row.data() + row.size());
  }
  whole.edges = graph.edges;
  whole.relations = graph.relations;
  whole.labels = graph.labels;
  return prepare(induced_subgraph(whole, nodes));
}

std::vector<PreparedGraph> prepare_all(
    std::span<const Subgraph* const> graphs) {
  std::vector<PreparedGraph> out;
  out.reserve(graphs.size());
  for (const Subgraph* sg : graphs) out.push_back(prepare(*sg));
  return out;
}

}  // namespace gfm4ga
