#include <sstream>

#include "doctest.h"
#include "gfm4ga/dataset_io.h"
#include "gfm4ga/graph.h"
#include "helpers.h"

using namespace gfm4ga;

namespace {

Subgraph triangle() {
  Subgraph sg;
  sg.id = "t";
  sg.node_ids = {10, 11, 12};
  sg.features = {{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}};
  sg.edges = {{0, 1, 0}, {1, 2, 1}, {0, 2, 0}};
  sg.relations = {0, 1};
  sg.labels = std::vector<int>{1, 0, 1};
  return sg;
}

bool mentions(const std::vector<std::string>& violations,
              const std::string& needle) {
  for (const auto& v : violations) {
    if (v.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("valid subgraph has no violations") {
  CHECK(validate(triangle()).empty());
}

TEST_CASE("validation names the offending field") {
  Subgraph sg = triangle();
  sg.edges.push_back({0, 5, 0});
  CHECK(mentions(validate(sg), "edges[3]"));

  sg = triangle();
  sg.features[1].push_back(2.0);
  CHECK(mentions(validate(sg), "features[1]"));

  sg = triangle();
  sg.features[2][0] = std::nan("");
  CHECK(mentions(validate(sg), "features[2]"));

  sg = triangle();
  sg.edges[0].relation = 7;
  CHECK(mentions(validate(sg), "edges[0]"));

  sg = triangle();
  sg.labels = std::vector<int>{1, 0};
  CHECK(mentions(validate(sg), "labels"));

  sg = triangle();
  sg.labels = std::vector<int>{1, 2, 0};
  CHECK(mentions(validate(sg), "labels[1]"));

  sg = triangle();
  sg.relations = {1, 0};
  CHECK(mentions(validate(sg), "relations"));
}

TEST_CASE("degree counts both endpoints and filters by relation") {
  const Subgraph sg = triangle();
  CHECK(degree(sg, 0) == 2);
  CHECK(degree(sg, 1, 1) == 1);
  CHECK(degree(sg, 1, 0) == 1);
  CHECK_THROWS_AS(degree(sg, 3), std::out_of_range);

  Subgraph loop = sg;
  loop.edges.push_back({2, 2, 0});
  CHECK(degree(loop, 2) == 4);
}

TEST_CASE("isolated node has degree zero") {
  Subgraph sg = triangle();
  sg.node_ids.push_back(13);
  sg.features.push_back({0.0, 0.0});
  sg.labels->push_back(0);
  CHECK(degree(sg, 3) == 0);
}

TEST_CASE("sum of degrees is twice the edge count") {
  Rng rng = make_rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Subgraph sg = testing::random_subgraph(rng, 9, 2, 3, 0.4);
    int total = 0;
    for (int v = 0; v < sg.num_nodes(); ++v) total += degree(sg, v);
    CHECK(total == 2 * static_cast<int>(sg.edges.size()));
  }
}

TEST_CASE("induced subgraph keeps surviving edges in order") {
  const Subgraph sg = triangle();
  const std::vector<int> nodes = {2, 0};
  const Subgraph sub = induced_subgraph(sg, nodes);
  CHECK(sub.node_ids == std::vector<std::int64_t>{12, 10});
  REQUIRE(sub.edges.size() == 1);
  CHECK(sub.edges[0] == Edge{1, 0, 0});
  CHECK(sub.relations == std::vector<int>{0});
  CHECK(*sub.labels == std::vector<int>{1, 1});
  CHECK(validate(sub).empty());
}

TEST_CASE("prepare expands undirected edges into two messages") {
  const PreparedGraph g = prepare(triangle());
  CHECK(g.messages.size() == 6);
  CHECK(g.neighbors[0] == std::vector<int>{1, 2});
  CHECK(g.degrees == std::vector<int>{2, 2, 2});
  CHECK(g.adjacent(1, 2));

  Subgraph directed = triangle();
  directed.directed = true;
  const PreparedGraph d = prepare(directed);
  REQUIRE(d.messages.size() == 3);
  CHECK(d.messages[0].target == 1);
  CHECK(d.messages[0].source == 0);
}

TEST_CASE("prepare rejects invalid subgraphs") {
  Subgraph sg = triangle();
  sg.edges.push_back({0, 9, 0});
  CHECK_THROWS_AS(prepare(sg), std::invalid_argument);
}

TEST_CASE("dataset registry and split tags follow the subgraphs") {
  Subgraph a = triangle();
  Subgraph b = triangle();
  b.id = "u";
  b.labels.reset();
  b.relations = {0, 1};
  const Dataset ds = Dataset::from_subgraphs({a, b});
  CHECK(ds.relation_registry == std::vector<int>{0, 1});
  CHECK(ds.labeled().size() == 1);
  CHECK(ds.unlabeled().size() == 1);
  CHECK(validate(ds).empty());

  Dataset dup = Dataset::from_subgraphs({a, a});
  CHECK(mentions(validate(dup), "duplicate id"));
}

TEST_CASE("dataset round trip is bit exact") {
  Rng rng = make_rng(11);
  std::vector<Subgraph> subgraphs;
  for (int i = 0; i < 20; ++i) {
    Subgraph sg = testing::random_subgraph(rng, 3 + i % 5, 4, 2, 0.5, i % 2 == 0,
                                           i % 3 == 0);
    sg.id = "sg" + std::to_string(i);
    sg.features[0][0] = 0.1 + 0.2;  // not representable exactly in decimal
    sg.features.back().back() = -1e-300;
    subgraphs.push_back(sg);
  }
  const Dataset ds = Dataset::from_subgraphs(subgraphs);
  std::stringstream buf;
  write_dataset(ds, buf);
  const Dataset back = read_dataset(buf);
  CHECK(back == ds);
}

TEST_CASE("parse errors carry the line number") {
  const std::string good = subgraph_to_json_line(triangle());
  std::string second = good;
  second.replace(second.find("\"t\""), 3, "\"s\"");

  {
    std::stringstream in(good + "\n" + "{not json\n");
    try {
      read_dataset(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  {
    std::string extra = second;
    extra.insert(1, "\"bogus\":1,");
    std::stringstream in(good + "\n" + extra + "\n");
    try {
      read_dataset(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
  }
  {
    std::string missing = good;
    const auto at = missing.find("\"directed\":false,");
    REQUIRE(at != std::string::npos);
    missing.erase(at, std::string("\"directed\":false,").size());
    std::stringstream in(missing + "\n");
    try {
      read_dataset(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
      CHECK(std::string(e.what()).find("directed") != std::string::npos);
    }
  }
  {
    std::stringstream in(good + "\n" + good + "\n");
    CHECK_THROWS_AS(read_dataset(in), ParseError);
  }
}
