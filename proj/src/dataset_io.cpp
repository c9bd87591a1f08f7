#include "gfm4ga/dataset_io.h"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "json.hpp"

namespace gfm4ga {
namespace {

using nlohmann::json;

constexpr std::array<const char*, 7> kKeys = {
    "id", "node_ids", "x", "edges", "relations", "y", "directed"};

json to_json(const Subgraph& sg) {
  json edges = json::array();
  for (const Edge& e : sg.edges) {
    edges.push_back({e.source, e.target, e.relation});
  }
  json j;
  j["id"] = sg.id;
  j["node_ids"] = sg.node_ids;
  j["x"] = sg.features;
  j["edges"] = std::move(edges);
  j["relations"] = sg.relations;
  j["y"] = sg.labels ? json(*sg.labels) : json(nullptr);
  j["directed"] = sg.directed;
  return j;
}

Subgraph from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
  for (const char* key : kKeys) {
    if (!j.contains(key)) {
      throw ParseError(line, std::string("missing key \"") + key + "\"");
    }
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : kKeys) known = known || item.key() == key;
    if (!known) {
      throw ParseError(line, "unexpected key \"" + item.key() + "\"");
    }
  }
  Subgraph sg;
  try {
    sg.id = j.at("id").get<std::string>();
    sg.node_ids = j.at("node_ids").get<std::vector<std::int64_t>>();
    sg.features = j.at("x").get<std::vector<std::vector<double>>>();
    for (const json& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3) {
        throw ParseError(line, "edge entries must be [u,v,rel] triples");
      }
      sg.edges.push_back(
          {e[0].get<int>(), e[1].get<int>(), e[2].get<int>()});
    }
    sg.relations = j.at("relations").get<std::vector<int>>();
    if (!j.at("y").is_null()) sg.labels = j.at("y").get<std::vector<int>>();
    sg.directed = j.at("directed").get<bool>();
  } catch (const json::exception& ex) {
    throw ParseError(line, ex.what());
  }
  return sg;
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what),
      line_(line) {}

std::string subgraph_to_json_line(const Subgraph& subgraph) {
  return to_json(subgraph).dump();
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  for (const Subgraph& sg : dataset.subgraphs) {
    out << subgraph_to_json_line(sg) << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  std::vector<Subgraph> subgraphs;
  std::set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& ex) {
      throw ParseError(line, ex.what());
    }
    Subgraph sg = from_json(j, line);
    const auto violations = validate(sg);
    if (!violations.empty()) throw ParseError(line, violations.front());
    if (!ids.insert(sg.id).second) {
      throw ParseError(line, "duplicate subgraph id \"" + sg.id + "\"");
    }
    subgraphs.push_back(std::move(sg));
  }
  return Dataset::from_subgraphs(std::move(subgraphs));
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_dataset(dataset, out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_dataset(in);
}

}  // namespace gfm4ga
