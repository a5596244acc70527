#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "graphex/graph_store.hpp"
#include "oracles.hpp"

using namespace graphex;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

ItemGraph line_graph(std::size_t n) {
  ItemGraph g;
  for (std::size_t i = 0; i < n; ++i) g.add_item(static_cast<ItemId>(i), vec2(i, 1));
  return g;
}

}  // namespace

TEST_CASE("add_item builds nodes and rejects duplicates") {
  ItemGraph g;
  g.add_item(7, vec2(0.1, 0.9));
  CHECK(g.node_count() == 1);
  CHECK(g.edge_count() == 0);
  CHECK_THROWS_AS(g.add_item(7, vec2(0, 0)), InvalidArgument);
  CHECK_THROWS_AS(g.add_item(8, Vector::Zero(3)), InvalidArgument);
  CHECK_THROWS_AS(g.add_item(9, vec2(std::nan(""), 0)), InvalidArgument);
  CHECK(g.node_count() == 1);

  ItemGraph big;
  for (ItemId i = 0; i < 1000; ++i) big.add_item(i, vec2(i, 0));
  CHECK(big.node_count() == 1000);
}

TEST_CASE("session edges form cliques and accumulate") {
  auto g = line_graph(4);
  CHECK(g.add_session_edges({0, {0, 1, 2}, 0.0}) == 3);
  CHECK(g.weight(0, 1) == 1);
  CHECK(g.weight(1, 2) == 1);
  CHECK(g.weight(0, 3) == 0);
  CHECK(g.add_session_edges({0, {3}, 0.0}) == 0);
  CHECK(g.add_session_edges({0, {0, 1, 2}, 0.0}) == 3);
  CHECK(g.weight(0, 1) == 2);
  CHECK(g.weight(0, 2) == 2);
  CHECK(g.weight(2, 1) == 2);
  CHECK(g.edge_count() == 3);
  g.check_invariants();
}

TEST_CASE("unknown or repeated items leave the graph unchanged") {
  auto g = line_graph(3);
  g.add_session_edges({0, {0, 1}, 0.0});
  const auto before = g;
  const std::vector<SessionRecord> batch{{0, {1, 2}, 0.0}, {1, {0, 99}, 0.0}};
  CHECK_THROWS_AS(g.apply_sessions(batch), InvalidArgument);
  CHECK(g == before);
  CHECK_THROWS_AS(g.add_session_edges({0, {1, 1}, 0.0}), InvalidArgument);
  CHECK(g == before);
}

TEST_CASE("long sessions only pair their leading items") {
  auto g = line_graph(60);
  SessionRecord s;
  for (ItemId i = 0; i < 60; ++i) s.positive_items.push_back(i);
  const auto cap = ItemGraph::kMaxSessionPositives;
  CHECK(g.add_session_edges(s) == cap * (cap - 1) / 2);
  CHECK(g.weight(0, 55) == 0);
}

TEST_CASE("version increases once per batch") {
  auto g = line_graph(5);
  auto v = g.version();
  const std::vector<SessionRecord> batch{{0, {0, 1}, 0.0}, {1, {2, 3}, 0.0}, {2, {1, 4}, 0.0}};
  g.apply_sessions(batch);
  CHECK(g.version() == v + 1);
  v = g.version();
  g.add_session_edges({0, {0, 4}, 1.0});
  CHECK(g.version() > v);
}

TEST_CASE("k identical sessions multiply weights by k") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = line_graph(12);
    SessionRecord s;
    for (ItemId i = 0; i < 12; ++i)
      if (rng() % 3 == 0) s.positive_items.push_back(i);
    const std::size_t k = 1 + rng() % 5;
    std::vector<SessionRecord> batch(k, s);
    g.apply_sessions(batch);
    for (auto a : s.positive_items)
      for (auto b : s.positive_items)
        if (a != b) {
          CHECK(g.weight(a, b) == k);
          CHECK(g.weight(a, b) == g.weight(b, a));
        }
    g.check_invariants();
  }
}

TEST_CASE("random walk neighbors") {
  SUBCASE("single neighbor") {
    auto g = line_graph(2);
    g.add_session_edges({0, {0, 1}, 0.0});
    CHECK(g.sample_neighbors(0, 5, 3, 11) == std::vector<ItemId>{1});
  }
  SUBCASE("isolated node") {
    auto g = line_graph(3);
    g.add_session_edges({0, {0, 1}, 0.0});
    CHECK(g.sample_neighbors(2, 5, 3, 11).empty());
  }
  SUBCASE("unknown node") {
    auto g = line_graph(2);
    CHECK_THROWS_AS(g.sample_neighbors(42, 5, 3, 1), InvalidArgument);
  }
  SUBCASE("deterministic, bounded and reachable") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t n = 15;
      auto g = line_graph(n);
      std::vector<std::vector<std::size_t>> adj(n);
      for (int e = 0; e < 14; ++e) {
        const ItemId a = rng() % n, b = rng() % n;
        if (a == b) continue;
        g.add_session_edges({0, {a, b}, 0.0});
        adj[a].push_back(b);
        adj[b].push_back(a);
      }
      for (ItemId v = 0; v < n; ++v) {
        const std::size_t fanout = 1 + rng() % 6, walk = 1 + rng() % 4;
        const auto seed = rng();
        const auto s1 = g.sample_neighbors(v, fanout, walk, seed);
        const auto s2 = g.sample_neighbors(v, fanout, walk, seed);
        CHECK(s1 == s2);
        CHECK(s1.size() <= fanout);
        const auto reach = oracle::reachable(adj, v, walk);
        std::set<ItemId> distinct(s1.begin(), s1.end());
        CHECK(distinct.size() == s1.size());
        for (auto u : s1) {
          CHECK(u != v);
          CHECK(reach.contains(u));
        }
      }
    }
  }
}

TEST_CASE("snapshot round trip") {
  auto g = line_graph(3);
  g.add_session_edges({0, {0, 1, 2}, 0.0});
  g.add_session_edges({1, {1, 2}, 0.0});
  std::stringstream s;
  write_snapshot(g, s);
  const auto loaded = read_snapshot(s);
  CHECK(loaded == g);
  CHECK(loaded.weight(1, 2) == 2);
  CHECK(loaded.version() == g.version());
  loaded.check_invariants();

  const auto path = std::filesystem::temp_directory_path() / "graphex_snapshot_test.tsv";
  save_snapshot(g, path);
  CHECK(load_snapshot(path) == g);
  std::filesystem::remove(path);
}

TEST_CASE("empty graph snapshot loads") {
  ItemGraph g;
  std::stringstream s;
  write_snapshot(g, s);
  const auto loaded = read_snapshot(s);
  CHECK(loaded.empty());
  CHECK(loaded.edge_count() == 0);
}

TEST_CASE("corrupt snapshots raise parse errors") {
  auto g = line_graph(3);
  g.add_session_edges({0, {0, 1, 2}, 0.0});
  std::stringstream s;
  write_snapshot(g, s);
  const std::string text = s.str();

  SUBCASE("truncated") {
    std::istringstream in(text.substr(0, text.size() - 8));
    CHECK_THROWS_AS(read_snapshot(in), ParseError);
  }
  SUBCASE("bad number reports its line") {
    std::string bad = text;
    bad.replace(bad.find('\n') + 1, 1, "x");
    std::istringstream in(bad);
    try {
      read_snapshot(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("trailing content") {
    std::istringstream in(text + "0\t1\t1\n");
    CHECK_THROWS_AS(read_snapshot(in), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_snapshot("/nonexistent/graph.tsv"), Error);
  }
}
