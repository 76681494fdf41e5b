#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <deque>
#include <numeric>

#include "crcsim/topology.hpp"

using namespace crcsim;

namespace {

// Independent BFS distances for cross-checking the routing table.
std::vector<Hops> bfs_dist(const Topology& topo, NodeId from) {
  std::vector<Hops> dist(topo.n, -1);
  std::deque<NodeId> q{from};
  dist[from] = 0;
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop_front();
    for (NodeId v : topo.adjacency[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  return dist;
}

double average_path_length(const Topology& topo) {
  double total = 0.0;
  for (NodeId i = 0; i < topo.n; ++i) {
    const auto d = bfs_dist(topo, i);
    total = std::accumulate(d.begin(), d.end(), total);
  }
  return total / (static_cast<double>(topo.n) * (topo.n - 1));
}

}  // namespace

TEST_CASE("random topology basic contracts") {
  const auto topo = build_random_topology(30, 7, {750000, 1000000}, {10, 90});
  CHECK(topo.n == 30);
  CHECK(is_connected(topo));
  for (NodeId i = 0; i < topo.n; ++i) {
    CHECK(topo.capacity_mb[i] >= 750000);
    CHECK(topo.capacity_mb[i] <= 1000000);
    CHECK(topo.subnet_size[i] >= 10);
    CHECK(topo.subnet_size[i] <= 90);
  }
}

TEST_CASE("random topology degenerate ranges and determinism") {
  const auto a = build_random_topology(2, 3, {100, 100}, {0, 0});
  CHECK(a.n == 2);
  CHECK(a.edges.size() == 1);
  CHECK(a.capacity_mb[0] == 100);
  CHECK(a.capacity_mb[1] == 100);

  const auto b = build_random_topology(30, 7, {750000, 1000000}, {10, 90});
  const auto c = build_random_topology(30, 7, {750000, 1000000}, {10, 90});
  CHECK(b.edges == c.edges);
  CHECK(b.capacity_mb == c.capacity_mb);

  const auto d = build_random_topology(30, 8, {750000, 1000000}, {10, 90});
  CHECK(b.edges != d.edges);
}

TEST_CASE("random topology rejects bad input") {
  CHECK_THROWS_AS(build_random_topology(1, 7, {10, 20}, {0, 5}), std::invalid_argument);
  CHECK_THROWS_AS(build_random_topology(5, 7, {20, 10}, {0, 5}), std::invalid_argument);
  CHECK_THROWS_AS(build_random_topology(5, 7, {10, 20}, {5, 0}), std::invalid_argument);
}

TEST_CASE("small world lattice at p=0 and edge preservation at p=1") {
  const auto lattice = build_small_world_topology(30, 4, 0.0, 1, {100, 100}, {1, 1});
  CHECK(lattice.edges.size() == 60);
  for (NodeId i = 0; i < lattice.n; ++i) CHECK(lattice.adjacency[i].size() == 4);

  const auto rewired = build_small_world_topology(30, 4, 1.0, 3, {100, 100}, {1, 1});
  CHECK(rewired.edges.size() == 60);
  CHECK(is_connected(rewired));
}

TEST_CASE("small world rewiring shortens average paths") {
  const auto lattice = build_small_world_topology(100, 6, 0.0, 11, {100, 100}, {1, 1});
  const auto rewired = build_small_world_topology(100, 6, 0.1, 11, {100, 100}, {1, 1});
  CHECK(average_path_length(rewired) < average_path_length(lattice));
}

TEST_CASE("small world rejects bad parameters") {
  CHECK_THROWS_AS(build_small_world_topology(30, 3, 0.1, 1, {100, 100}, {1, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_small_world_topology(30, 30, 0.1, 1, {100, 100}, {1, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_small_world_topology(30, 4, 1.5, 1, {100, 100}, {1, 1}),
                  std::invalid_argument);
}

TEST_CASE("routing distances match BFS, symmetric, triangle inequality") {
  const auto topo = build_random_topology(25, 42, {1000, 2000}, {1, 5});
  const auto routes = build_routing(topo);
  for (NodeId s = 0; s < topo.n; ++s) {
    const auto d = bfs_dist(topo, s);
    for (NodeId i = 0; i < topo.n; ++i) {
      CHECK(routes.distance(i, s) == d[i]);
      CHECK(routes.distance(i, s) == routes.distance(s, i));
    }
  }
  CHECK(routes.distance(3, 3) == 0);
  for (NodeId a = 0; a < 6; ++a)
    for (NodeId b = 0; b < 6; ++b)
      for (NodeId c = 0; c < 6; ++c)
        CHECK(routes.distance(a, c) <= routes.distance(a, b) + routes.distance(b, c));
}

TEST_CASE("en-route suffix property holds for every pair") {
  const auto topo = build_small_world_topology(40, 4, 0.2, 5, {100, 100}, {1, 1});
  const auto routes = build_routing(topo);
  for (NodeId i = 0; i < topo.n; ++i) {
    for (NodeId s = 0; s < topo.n; ++s) {
      if (i == s) continue;
      const auto full = routes.path(i, s);
      const auto tail = routes.path(full[1], s);
      CHECK(std::equal(tail.begin(), tail.end(), full.begin() + 1, full.end()));
      CHECK(static_cast<Hops>(full.size() - 1) == routes.distance(i, s));
    }
  }
}

TEST_CASE("caching tree parents follow next hops and depths match distances") {
  // Chain 0-1-2-3 mirrors the running four-node example.
  auto topo = make_topology(TopologyKind::kExplicit, 4, {{0, 1}, {1, 2}, {2, 3}},
                            {0, 100, 0, 100}, {0, 3, 4, 2});
  const auto routes = build_routing(topo);
  const auto parent = caching_tree(topo, routes, 0);
  CHECK(parent[0] == kNoNode);
  CHECK(parent[1] == 0);
  CHECK(parent[2] == 1);
  CHECK(parent[3] == 2);

  const auto rnd = build_random_topology(20, 9, {1000, 1000}, {1, 1});
  const auto rr = build_routing(rnd);
  const auto par = caching_tree(rnd, rr, 4);
  for (NodeId i = 0; i < rnd.n; ++i) {
    if (i == 4) continue;
    Hops depth = 0;
    NodeId u = i;
    while (u != 4) {
      u = par[u];
      ++depth;
    }
    CHECK(depth == rr.distance(i, 4));
  }
}

TEST_CASE("lower bound star shape and phase volumes") {
  const auto star = build_lower_bound_star(4, 1000);
  CHECK(star.n == 6);
  CHECK(star.caching_node_count() == 1);
  CHECK(star.capacity_mb[1] == 1000);
  CHECK(star.adjacency[1].size() == 5);
  CHECK_THROWS_AS(build_lower_bound_star(3, 1000), std::invalid_argument);
}

TEST_CASE("topology export/import round trip") {
  const auto topo = build_random_topology(12, 99, {500, 900}, {0, 7});
  const std::string text = export_topology(topo);
  const auto back = import_topology(text);
  CHECK(back.n == topo.n);
  CHECK(back.edges == topo.edges);
  CHECK(back.capacity_mb == topo.capacity_mb);
  CHECK(back.subnet_size == topo.subnet_size);
  CHECK(export_topology(back) == text);
  CHECK_THROWS_AS(import_topology("garbage"), std::invalid_argument);
}
