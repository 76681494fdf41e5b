#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace crcsim {

using NodeId = std::uint32_t;
using ContentId = std::uint32_t;
using Hops = std::int32_t;
using SizeMb = std::int64_t;
using Slot = std::int32_t;

inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

enum class TopologyKind { kRandom, kSmallWorld, kLowerBoundStar, kExplicit };

// Caching-node graph with unit-weight links. Non-caching subnetworks are
// represented only by subnet_size (the end-node count behind each router);
// capacity 0 marks a router that routes but never caches.
struct Topology {
  TopologyKind kind = TopologyKind::kExplicit;
  NodeId n = 0;
  std::vector<std::pair<NodeId, NodeId>> edges;  // first < second
  std::vector<std::vector<NodeId>> adjacency;    // sorted neighbor lists
  std::vector<SizeMb> capacity_mb;
  std::vector<std::int32_t> subnet_size;

  void finalize();  // rebuilds adjacency from edges and validates
  bool has_edge(NodeId a, NodeId b) const;
  int caching_node_count() const;  // nodes with capacity > 0
};

Topology make_topology(TopologyKind kind, NodeId n,
                       std::vector<std::pair<NodeId, NodeId>> edges,
                       std::vector<SizeMb> capacity_mb,
                       std::vector<std::int32_t> subnet_size);

bool is_connected(const Topology& topo);

// Fixed shortest paths with ties broken toward the smallest next-hop id, so
// routing is deterministic and the union of paths to any destination is a
// tree (the en-route suffix property holds by construction).
struct RoutingTable {
  NodeId n = 0;
  std::vector<NodeId> next_hop;  // [dst * n + cur], kNoNode when cur == dst
  std::vector<Hops> hops;        // [dst * n + cur]

  NodeId next(NodeId cur, NodeId dst) const {
    return next_hop[static_cast<std::size_t>(dst) * n + cur];
  }
  Hops distance(NodeId a, NodeId b) const {
    return hops[static_cast<std::size_t>(b) * n + a];
  }
  // Nodes of the path src -> dst, inclusive of both endpoints.
  std::vector<NodeId> path(NodeId src, NodeId dst) const;
};

RoutingTable build_routing(const Topology& topo);

// Parent map of the tree formed by all fixed paths toward `source`;
// parent(source) == kNoNode.
std::vector<NodeId> caching_tree(const Topology& topo, const RoutingTable& routes,
                                 NodeId source);

Topology build_random_topology(NodeId n, std::uint64_t seed,
                               std::pair<SizeMb, SizeMb> capacity_range,
                               std::pair<std::int32_t, std::int32_t> subnet_range);

Topology build_small_world_topology(NodeId n, int mean_degree, double rewire_prob,
                                    std::uint64_t seed,
                                    std::pair<SizeMb, SizeMb> capacity_range,
                                    std::pair<std::int32_t, std::int32_t> subnet_range);

// Star used by the adversarial lower-bound instance: source, one caching node
// of the given capacity, and n requester leaves behind it.
Topology build_lower_bound_star(NodeId n_leaves, SizeMb cache_capacity_mb);

// Plain-text adjacency list: one record per line
//   id capacity_mb subnet_size neighbor...
std::string export_topology(const Topology& topo);
Topology import_topology(const std::string& text);

}  // namespace crcsim
