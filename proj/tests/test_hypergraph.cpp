#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "uhg/fixtures.hpp"
#include "uhg/hypergraph.hpp"

using namespace uhg;

namespace {

std::vector<std::vector<Id>> lists(const Ragged& r) { return r.to_lists(); }

// Independent transpose oracle: direct enumeration over (edge, member).
std::vector<std::vector<Id>> transpose_oracle(
    const std::vector<std::vector<Id>>& edges, int n) {
  std::vector<std::vector<Id>> incident(n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    for (Id v : edges[e]) incident[v].push_back(static_cast<Id>(e));
  }
  for (auto& l : incident) std::sort(l.begin(), l.end());
  return incident;
}

}  // namespace

TEST_CASE("build materializes both relations") {
  auto h = build(3, {{0, 1, 2}});
  CHECK(h.num_vertices == 3);
  CHECK(h.num_edges() == 1);
  CHECK(lists(h.vertex_incident) ==
        std::vector<std::vector<Id>>{{0}, {0}, {0}});
  CHECK(h.symmetric);

  auto tri = build(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(lists(tri.vertex_incident) ==
        std::vector<std::vector<Id>>{{0, 2}, {0, 1}, {1, 2}});
}

TEST_CASE("build rejects bad input") {
  CHECK_THROWS_WITH_AS(build(2, {{}}), doctest::Contains("EmptyEdge"), Error);
  CHECK_THROWS_AS(build(2, {{0, 5}}), Error);
  CHECK_THROWS_AS(build(0, {}), Error);
  try {
    build(2, {{0, 5}});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::vertex_id_out_of_range);
  }
}

TEST_CASE("build dedupes and sorts members, keeps duplicate edges") {
  auto h = build(4, {{2, 0, 2}, {0, 2}});
  CHECK(lists(h.edge_members) == std::vector<std::vector<Id>>{{0, 2}, {0, 2}});
  CHECK(h.num_edges() == 2);  // duplicate edges stay distinct
}

TEST_CASE("add_self_loops adds exactly the missing singletons") {
  auto h = add_self_loops(build(3, {{0, 1, 2}}));
  CHECK(lists(h.edge_members) ==
        std::vector<std::vector<Id>>{{0, 1, 2}, {0}, {1}, {2}});

  auto partial = add_self_loops(build(2, {{0}, {0, 1}}));
  CHECK(lists(partial.edge_members) ==
        std::vector<std::vector<Id>>{{0}, {0, 1}, {1}});
}

TEST_CASE("add_self_loops is idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto h = fixtures::random_hypergraph(10, 12, 4, rng);
    auto once = add_self_loops(h);
    auto twice = add_self_loops(once);
    CHECK(structurally_equal(once, twice));
    CHECK(has_all_self_loops(once));
  }
}

TEST_CASE("degrees on a self-looped structure") {
  auto h = add_self_loops(build(3, {{0, 1, 2}}));
  auto d = degrees(h);
  CHECK(d.d_vertex == std::vector<double>{2, 2, 2});
  CHECK(d.d_edge == std::vector<double>{2, 2, 2, 2});

  auto single = add_self_loops(build(1, {{0}}));
  auto ds = degrees(single);
  CHECK(ds.d_vertex == std::vector<double>{1});
  CHECK(ds.d_edge == std::vector<double>{1});
}

TEST_CASE("degrees on the graph reduction equal graph degrees") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 8);
    auto adj = fixtures::random_graph_adjacency(n, 0.5, rng);
    auto red = reduction_from_graph(adj, /*with_self=*/true);
    auto d = degrees(red);
    for (int i = 0; i < n; ++i) {
      CHECK(d.d_vertex[i] == static_cast<double>(adj[i].size() + 1));
    }
    // singleton edge {j}: average member degree is just d_j
    for (int j = 0; j < n; ++j) {
      CHECK(d.d_edge[j] == d.d_vertex[j]);
    }
  }
}

TEST_CASE("incidence graph") {
  auto g = incidence_graph(build(2, {{0, 1}}));
  CHECK(g.pairs == std::vector<std::pair<Id, Id>>{{0, 0}, {1, 0}});

  auto g2 = incidence_graph(build(3, {{0, 1, 2}, {1, 2}}));
  CHECK(g2.pairs.size() == 5);

  auto empty = incidence_graph(build(3, {}));
  CHECK(empty.num_left == 3);
  CHECK(empty.pairs.empty());
}

TEST_CASE("induce restricts edges and renumbers densely") {
  auto r = induce(build(3, {{0, 1, 2}}), {0, 1});
  CHECK(lists(r.structure.edge_members) ==
        std::vector<std::vector<Id>>{{0, 1}});
  CHECK(r.old_to_new == std::vector<Id>{0, 1, -1});

  auto dropped = induce(build(4, {{0, 1}, {2, 3}}), {0, 1});
  CHECK(lists(dropped.structure.edge_members) ==
        std::vector<std::vector<Id>>{{0, 1}});
  CHECK(dropped.structure.num_edges() == 1);

  // size-1 survivors are kept
  auto shrunk = induce(build(3, {{0, 1, 2}}), {2});
  CHECK(lists(shrunk.structure.edge_members) ==
        std::vector<std::vector<Id>>{{0}});

  CHECK_THROWS_AS(induce(build(2, {{0}}), {}), Error);
}

TEST_CASE("induce with full visibility is an isomorphism") {
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    auto h = fixtures::random_hypergraph(12, 15, 4, rng);
    std::vector<Id> all(h.num_vertices);
    std::iota(all.begin(), all.end(), 0);
    auto r = induce(h, all);
    CHECK(structurally_equal(r.structure, h));
    // and permuting by the identity map reproduces it too
    CHECK(structurally_equal(permute(h, all), h));
  }
}

TEST_CASE("reduction_from_graph") {
  auto path = reduction_from_graph({{1}, {0}}, /*with_self=*/true);
  CHECK_FALSE(path.symmetric);
  CHECK(lists(path.edge_members) == std::vector<std::vector<Id>>{{0}, {1}});
  CHECK(lists(path.vertex_incident) ==
        std::vector<std::vector<Id>>{{0, 1}, {0, 1}});

  auto isolated = reduction_from_graph({{}}, /*with_self=*/true);
  CHECK(lists(isolated.vertex_incident) == std::vector<std::vector<Id>>{{0}});

  auto tri = reduction_from_graph({{1, 2}, {0, 2}, {0, 1}},
                                  /*with_self=*/false);
  CHECK(lists(tri.vertex_incident) ==
        std::vector<std::vector<Id>>{{1, 2}, {0, 2}, {0, 1}});
}

TEST_CASE("permute maps edges elementwise") {
  auto h = build(2, {{0, 1}});
  CHECK(structurally_equal(permute(h, {1, 0}), h));  // edge is a set

  auto g = permute(build(3, {{0}, {0, 1, 2}}), {2, 0, 1});
  CHECK(lists(g.edge_members) == std::vector<std::vector<Id>>{{2}, {0, 1, 2}});

  CHECK_THROWS_AS(permute(h, {0, 0}), Error);
  CHECK_THROWS_AS(permute(h, {0}), Error);
}

TEST_CASE("transpose duality on random hypergraphs") {
  Rng rng(301);
  for (int trial = 0; trial < 1000; ++trial) {
    auto h = fixtures::random_hypergraph(30, 60, 6, rng);
    auto edges = lists(h.edge_members);
    CHECK(lists(h.vertex_incident) ==
          transpose_oracle(edges, h.num_vertices));
    // round-trip: rebuilding from the edge lists reproduces both relations
    auto rebuilt = build(h.num_vertices, edges);
    CHECK(structurally_equal(rebuilt, h));
  }
}

TEST_CASE("hypergraph json round trip") {
  auto h = build(4, {{0, 1, 2}, {2, 3}});
  auto back = hypergraph_from_json(hypergraph_to_json(h));
  CHECK(structurally_equal(h, back));

  CHECK_THROWS_AS(hypergraph_from_json("{"), Error);
  CHECK_THROWS_AS(hypergraph_from_json("{\"num_vertices\": 2}"), Error);
  try {
    hypergraph_from_json(
        "{\"num_vertices\": 2, \"hyperedges\": [[0], [0, 7]]}");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::vertex_id_out_of_range);
    CHECK(std::string(e.what()).find("hyperedges[1]") != std::string::npos);
  }
}
