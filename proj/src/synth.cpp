#include "gfm4ga/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gfm4ga/parallel.h"

namespace gfm4ga {

std::string to_string(AnomalyPattern pattern) {
  switch (pattern) {
    case AnomalyPattern::kDense:
      return "dense";
    case AnomalyPattern::kChain:
      return "chain";
    case AnomalyPattern::kMixed:
      return "mixed";
  }
  return "mixed";
}

AnomalyPattern parse_pattern(const std::string& text) {
  if (text == "dense") return AnomalyPattern::kDense;
  if (text == "chain") return AnomalyPattern::kChain;
  if (text == "mixed") return AnomalyPattern::kMixed;
  throw std::invalid_argument("unknown anomaly pattern '" + text +
                              "' (expected dense, chain or mixed)");
}

void check_config(const SynthConfig& c) {
  const auto fail = [](const std::string& what) {
    throw std::invalid_argument("synth config: " + what);
  };
  const auto rate = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) fail(std::string(name) + " must lie in [0,1]");
  };
  if (c.num_subgraphs < 1) fail("num_subgraphs must be positive");
  if (c.feature_dim < 1) fail("feature_dim must be positive");
  if (!(c.size_std >= 0.0) || !(c.group_size_std >= 0.0)) {
    fail("standard deviations must be non-negative");
  }
  if (!(c.group_size_mean >= 3.0)) fail("group_size_mean must be at least 3");
  if (!(c.group_size_mean < c.size_mean)) {
    fail("group_size_mean must be below size_mean");
  }
  if (!(c.feature_shift >= 0.0)) fail("feature_shift must be non-negative");
  rate(c.inner_density, "inner_density");
  rate(c.camouflage_rate, "camouflage_rate");
  rate(c.labeled_fraction, "labeled_fraction");
  rate(c.group_rate, "group_rate");
  if (c.num_relations < 1) fail("num_relations must be positive");
  if (c.backbone_attachment < 1) fail("backbone_attachment must be positive");
}

namespace {

int draw_size(Rng& rng, double mean, double stddev, int lo) {
  std::normal_distribution<double> dist(mean, stddev);
  const double v = stddev > 0.0 ? dist(rng) : mean;
  return std::max(lo, static_cast<int>(std::lround(v)));
}

// Preferential attachment over nodes [0, n): a small clique seeds the graph,
// then each new node links to m distinct nodes drawn by degree.
std::vector<std::pair<int, int>> backbone(int n, int m, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  const int seed_size = std::min(n, m + 1);
  std::vector<int> endpoints;  // each node repeated once per incident edge
  for (int u = 0; u < seed_size; ++u) {
    for (int v = u + 1; v < seed_size; ++v) {
      edges.emplace_back(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  for (int u = seed_size; u < n; ++u) {
    std::set<int> picked;
    const int want = std::min(m, u);
    while (static_cast<int>(picked.size()) < want) {
      if (endpoints.empty()) {
        picked.insert(std::uniform_int_distribution<int>(0, u - 1)(rng));
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
        picked.insert(endpoints[pick(rng)]);
      }
    }
    for (int v : picked) {
      edges.emplace_back(v, u);
      endpoints.push_back(v);
      endpoints.push_back(u);
    }
  }
  return edges;
}

Subgraph synth_one(const SynthConfig& c, std::size_t index, bool labeled) {
  Rng rng = make_rng(c.seed, index + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const bool has_group = unit(rng) < c.group_rate;
  int n = draw_size(rng, c.size_mean, c.size_std, 4);
  int g = draw_size(rng, c.group_size_mean, c.group_size_std, 3);
  n = std::max(n, g + 1);
  g = std::min(g, n - 1);
  if (!has_group) g = 0;
  const int benign = n - g;

  std::uniform_int_distribution<int> relation(0, c.num_relations - 1);
  std::vector<Edge> edges;
  for (auto [u, v] : backbone(benign, c.backbone_attachment, rng)) {
    edges.push_back({u, v, relation(rng)});
  }

  AnomalyPattern pattern = c.pattern;
  if (pattern == AnomalyPattern::kMixed) {
    pattern = unit(rng) < 0.5 ? AnomalyPattern::kDense : AnomalyPattern::kChain;
  }
  if (g > 0) {
    if (pattern == AnomalyPattern::kDense) {
      for (int a = 0; a < g; ++a) {
        for (int b = a + 1; b < g; ++b) {
          if (unit(rng) < c.inner_density) {
            edges.push_back({benign + a, benign + b, relation(rng)});
          }
        }
      }
    } else {
      std::vector<int> order(g);
      for (int a = 0; a < g; ++a) order[a] = benign + a;
      std::shuffle(order.begin(), order.end(), rng);
      for (int a = 0; a + 1 < g; ++a) {
        edges.push_back({order[a], order[a + 1], relation(rng)});
      }
    }
    for (int a = 0; a < g; ++a) {
      for (int v = 0; v < benign; ++v) {
        if (unit(rng) < c.camouflage_rate) {
          edges.push_back({benign + a, v, relation(rng)});
        }
      }
    }
  }

  const int d = c.feature_dim;
  std::vector<std::vector<double>> features(n, std::vector<double>(d));
  for (auto& row : features) {
    for (double& x : row) x = normal(rng);
  }
  if (g > 0 && c.feature_shift > 0.0) {
    std::vector<double> direction(d);
    double norm = 0.0;
    for (double& x : direction) {
      x = normal(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (int a = benign; a < n; ++a) {
      for (int k = 0; k < d; ++k) {
        features[a][k] += c.feature_shift * direction[k] / norm;
      }
    }
  }

  std::vector<int> perm(n);  // perm[new position] = generation index
  for (int v = 0; v < n; ++v) perm[v] = v;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> where(n);
  for (int p = 0; p < n; ++p) where[perm[p]] = p;

  Subgraph sg;
  char id[32];
  std::snprintf(id, sizeof id, "syn-%05zu", index);
  sg.id = id;
  std::vector<int> labels(n);
  for (int p = 0; p < n; ++p) {
    sg.node_ids.push_back(perm[p]);
    sg.features.push_back(std::move(features[perm[p]]));
    labels[p] = perm[p] >= benign ? 1 : 0;
  }
  std::set<int> relations;
  for (Edge& e : edges) {
    e.source = where[e.source];
    e.target = where[e.target];
    relations.insert(e.relation);
  }
  sg.edges = std::move(edges);
  sg.relations = relations.empty() ? std::vector<int>{0}
                                   : std::vector<int>(relations.begin(),
                                                      relations.end());
  if (labeled) sg.labels = std::move(labels);
  return sg;
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& config) {
  check_config(config);
  const auto n = static_cast<std::size_t>(config.num_subgraphs);
  const auto labeled_count = static_cast<std::size_t>(
      std::lround(config.labeled_fraction * double(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng pick = make_rng(config.seed, 0);
  std::shuffle(order.begin(), order.end(), pick);
  std::vector<char> labeled(n, 0);
  for (std::size_t i = 0; i < labeled_count; ++i) labeled[order[i]] = 1;

  std::vector<Subgraph> subgraphs(n);
  parallel_for(n, [&](std::size_t i) {
    subgraphs[i] = synth_one(config, i, labeled[i] != 0);
  });
  return Dataset::from_subgraphs(std::move(subgraphs));
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

bool skip_line(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

[[noreturn]] void bad_line(const std::filesystem::path& path, int line,
                           const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " +
                           what);
}

}  // namespace

BaseGraph load_base_graph(const std::filesystem::path& edges_path,
                          const std::filesystem::path& labels_path,
                          const std::optional<std::filesystem::path>& features_path,
                          bool directed) {
  struct RawEdge {
    std::int64_t u, v;
    int rel;
  };
  std::vector<RawEdge> raw_edges;
  std::map<std::int64_t, int> raw_labels;
  std::map<std::int64_t, std::vector<double>> raw_features;
  std::set<std::int64_t> ids;

  {
    std::ifstream in = open_input(edges_path);
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
      if (skip_line(line)) continue;
      std::istringstream fields(line);
      RawEdge e{};
      if (!(fields >> e.u >> e.v)) bad_line(edges_path, no, "expected 'u v rel'");
      if (!(fields >> e.rel)) e.rel = 0;
      raw_edges.push_back(e);
      ids.insert(e.u);
      ids.insert(e.v);
    }
  }
  {
    std::ifstream in = open_input(labels_path);
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
      if (skip_line(line)) continue;
      std::istringstream fields(line);
      std::int64_t node = 0;
      int label = 0;
      if (!(fields >> node >> label) || (label != 0 && label != 1)) {
        bad_line(labels_path, no, "expected 'node label' with label 0 or 1");
      }
      raw_labels[node] = label;
      ids.insert(node);
    }
  }
  if (features_path) {
    std::ifstream in = open_input(*features_path);
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
      if (skip_line(line)) continue;
      std::istringstream fields(line);
      std::int64_t node = 0;
      if (!(fields >> node)) bad_line(*features_path, no, "expected node id");
      std::vector<double> row;
      for (double x; fields >> x;) row.push_back(x);
      raw_features[node] = std::move(row);
      ids.insert(node);
    }
  }

  BaseGraph base;
  base.directed = directed;
  base.node_ids.assign(ids.begin(), ids.end());
  std::map<std::int64_t, int> index;
  for (std::size_t i = 0; i < base.node_ids.size(); ++i) {
    index[base.node_ids[i]] = static_cast<int>(i);
  }
  for (const RawEdge& e : raw_edges) {
    base.edges.push_back({index[e.u], index[e.v], e.rel});
  }
  base.labels.assign(base.node_ids.size(), 0);
  for (auto [node, label] : raw_labels) base.labels[index[node]] = label;

  if (features_path) {
    std::size_t dim = raw_features.empty() ? 0 : raw_features.begin()->second.size();
    for (std::int64_t id : base.node_ids) {
      auto it = raw_features.find(id);
      if (it == raw_features.end()) {
        throw std::runtime_error(features_path->string() +
                                 ": no features for node " + std::to_string(id));
      }
      if (it->second.size() != dim) {
        throw std::runtime_error(features_path->string() + ": node " +
                                 std::to_string(id) + " has " +
                                 std::to_string(it->second.size()) +
                                 " features, expected " + std::to_string(dim));
      }
      base.features.push_back(it->second);
    }
  } else {
    std::vector<double> deg(base.node_ids.size(), 0.0);
    for (const Edge& e : base.edges) {
      deg[e.source] += 1.0;
      deg[e.target] += 1.0;
    }
    for (double d : deg) base.features.push_back({d});
  }
  return base;
}

namespace {

double jaccard(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t common = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return uni == 0 ? 1.0 : double(common) / double(uni);
}

// Keeps ceil(fraction * |frontier|) members of a sorted frontier at random.
std::vector<int> keep_fraction(std::vector<int> frontier, double fraction,
                               Rng& rng) {
  std::shuffle(frontier.begin(), frontier.end(), rng);
  const auto keep = static_cast<std::size_t>(
      std::ceil(fraction * double(frontier.size()) - 1e-12));
  frontier.resize(std::min(keep, frontier.size()));
  std::sort(frontier.begin(), frontier.end());
  return frontier;
}

int largest_anomaly_component(const std::vector<int>& nodes,
                              const std::vector<std::vector<int>>& adjacency,
                              const std::vector<int>& labels) {
  std::set<int> inside;
  for (int v : nodes) {
    if (labels[v] == 1) inside.insert(v);
  }
  std::set<int> seen;
  int best = 0;
  for (int start : inside) {
    if (seen.count(start)) continue;
    int size = 0;
    std::deque<int> queue{start};
    seen.insert(start);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      ++size;
      for (int v : adjacency[u]) {
        if (inside.count(v) && seen.insert(v).second) queue.push_back(v);
      }
    }
    best = std::max(best, size);
  }
  return best;
}

}  // namespace

Dataset sample_group_subgraphs(const BaseGraph& base,
                               const SampleConfig& config) {
  if (config.min_interconnected < 1) {
    throw std::invalid_argument("sample: min_interconnected must be positive");
  }
  if (!(config.dedup_threshold >= 0.0 && config.dedup_threshold <= 1.0) ||
      !(config.hop_fraction > 0.0 && config.hop_fraction <= 1.0)) {
    throw std::invalid_argument(
        "sample: dedup_threshold must lie in [0,1] and hop_fraction in (0,1]");
  }
  const int n = static_cast<int>(base.node_ids.size());
  if (static_cast<int>(base.labels.size()) != n ||
      static_cast<int>(base.features.size()) != n) {
    throw std::invalid_argument("sample: base graph arrays disagree in length");
  }
  std::vector<std::vector<int>> adjacency(n);
  for (const Edge& e : base.edges) {
    if (e.source == e.target) continue;
    adjacency[e.source].push_back(e.target);
    adjacency[e.target].push_back(e.source);
  }
  for (auto& nb : adjacency) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }

  std::vector<int> anomalies;
  for (int v = 0; v < n; ++v) {
    if (base.labels[v] == 1) anomalies.push_back(v);
  }
  if (anomalies.empty()) {
    log_warning("sample: base graph has no anomaly nodes; nothing to emit");
    return Dataset::from_subgraphs({});
  }

  std::vector<std::vector<int>> emitted;
  std::vector<Subgraph> out;
  for (int a : anomalies) {
    Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(a) + 1);
    const std::vector<int> hop1 =
        keep_fraction(adjacency[a], config.hop_fraction, rng);
    std::set<int> chosen(hop1.begin(), hop1.end());
    chosen.insert(a);
    std::set<int> frontier;
    for (int u : hop1) {
      for (int v : adjacency[u]) {
        if (!chosen.count(v)) frontier.insert(v);
      }
    }
    for (int v : keep_fraction({frontier.begin(), frontier.end()},
                               config.hop_fraction, rng)) {
      chosen.insert(v);
    }
    std::vector<int> nodes(chosen.begin(), chosen.end());
    if (largest_anomaly_component(nodes, adjacency, base.labels) <
        config.min_interconnected) {
      continue;
    }
    bool duplicate = false;
    for (const auto& prev : emitted) {
      if (jaccard(prev, nodes) > config.dedup_threshold) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;

    std::vector<int> remap(n, -1);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      remap[nodes[i]] = static_cast<int>(i);
    }
    Subgraph sg;
    sg.id = "s" + std::to_string(base.node_ids[a]);
    sg.directed = base.directed;
    std::vector<int> labels;
    for (int v : nodes) {
      sg.node_ids.push_back(base.node_ids[v]);
      sg.features.push_back(base.features[v]);
      labels.push_back(base.labels[v]);
    }
    std::set<int> relations;
    for (const Edge& e : base.edges) {
      const int s = remap[e.source];
      const int t = remap[e.target];
      if (s < 0 || t < 0) continue;
      sg.edges.push_back({s, t, e.relation});
      relations.insert(e.relation);
    }
    sg.relations = relations.empty() ? std::vector<int>{0}
                                     : std::vector<int>(relations.begin(),
                                                        relations.end());
    sg.labels = std::move(labels);
    emitted.push_back(std::move(nodes));
    out.push_back(std::move(sg));
  }
  return Dataset::from_subgraphs(std::move(out));
}

std::vector<KShotSplit> make_kshot_splits(
    const Dataset& dataset, int k, const std::vector<std::uint64_t>& seeds) {
  std::vector<std::string> labeled;
  for (const Subgraph* sg : dataset.labeled()) labeled.push_back(sg->id);
  if (k < 1) throw std::invalid_argument("k-shot: k must be at least 1");
  if (k > static_cast<int>(labeled.size())) {
    throw std::invalid_argument("k-shot: k=" + std::to_string(k) +
                                " exceeds the " +
                                std::to_string(labeled.size()) +
                                " labeled subgraphs");
  }
  if (k == static_cast<int>(labeled.size())) {
    log_warning("k-shot: k equals the labeled count; evaluation sets are empty");
  }
  std::vector<KShotSplit> splits;
  for (std::uint64_t seed : seeds) {
    std::vector<std::size_t> order(labeled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = make_rng(seed, 0x6b73686f74ULL);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<char> picked(labeled.size(), 0);
    KShotSplit split{.shots = k, .seed = seed, .finetune_ids = {},
                     .eval_ids = {}};
    for (int i = 0; i < k; ++i) {
      picked[order[i]] = 1;
      split.finetune_ids.push_back(labeled[order[i]]);
    }
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      if (!picked[i]) split.eval_ids.push_back(labeled[i]);
    }
    splits.push_back(std::move(split));
  }
  return splits;
}

}  // namespace gfm4ga
