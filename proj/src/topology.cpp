#include "crcsim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>

#include "crcsim/rng.hpp"

namespace crcsim {

void Topology::finalize() {
  adjacency.assign(n, {});
  for (auto& e : edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
    if (e.first == e.second || e.second >= n)
      throw std::invalid_argument("topology: bad edge");
    adjacency[e.first].push_back(e.second);
    adjacency[e.second].push_back(e.first);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (auto& nbrs : adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  if (capacity_mb.size() != n || subnet_size.size() != n)
    throw std::invalid_argument("topology: per-node vectors must have length n");
  for (NodeId i = 0; i < n; ++i) {
    if (capacity_mb[i] < 0) throw std::invalid_argument("topology: negative capacity");
    if (subnet_size[i] < 0) throw std::invalid_argument("topology: negative subnet size");
  }
}

bool Topology::has_edge(NodeId a, NodeId b) const {
  if (a > b) std::swap(a, b);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(a, b));
}

int Topology::caching_node_count() const {
  int c = 0;
  for (SizeMb d : capacity_mb)
    if (d > 0) ++c;
  return c;
}

Topology make_topology(TopologyKind kind, NodeId n,
                       std::vector<std::pair<NodeId, NodeId>> edges,
                       std::vector<SizeMb> capacity_mb,
                       std::vector<std::int32_t> subnet_size) {
  Topology t;
  t.kind = kind;
  t.n = n;
  t.edges = std::move(edges);
  t.capacity_mb = std::move(capacity_mb);
  t.subnet_size = std::move(subnet_size);
  t.finalize();
  return t;
}

bool is_connected(const Topology& topo) {
  if (topo.n == 0) return false;
  std::vector<char> seen(topo.n, 0);
  std::deque<NodeId> queue{0};
  seen[0] = 1;
  NodeId reached = 1;
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : topo.adjacency[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        queue.push_back(v);
      }
    }
  }
  return reached == topo.n;
}

RoutingTable build_routing(const Topology& topo) {
  if (!is_connected(topo)) throw std::invalid_argument("routing: topology not connected");
  RoutingTable rt;
  rt.n = topo.n;
  rt.next_hop.assign(static_cast<std::size_t>(topo.n) * topo.n, kNoNode);
  rt.hops.assign(static_cast<std::size_t>(topo.n) * topo.n, -1);
  std::deque<NodeId> queue;
  for (NodeId dst = 0; dst < topo.n; ++dst) {
    const std::size_t base = static_cast<std::size_t>(dst) * topo.n;
    rt.hops[base + dst] = 0;
    queue.clear();
    queue.push_back(dst);
    while (!queue.empty()) {
      NodeId u = queue.front();
      queue.pop_front();
      for (NodeId v : topo.adjacency[u]) {
        if (rt.hops[base + v] < 0) {
          rt.hops[base + v] = rt.hops[base + u] + 1;
          queue.push_back(v);
        }
      }
    }
    // Parent toward dst = neighbor one hop closer, smallest id on ties.
    for (NodeId u = 0; u < topo.n; ++u) {
      if (u == dst) continue;
      for (NodeId v : topo.adjacency[u]) {
        if (rt.hops[base + v] == rt.hops[base + u] - 1) {
          rt.next_hop[base + u] = v;
          break;  // adjacency sorted ascending
        }
      }
    }
  }
  return rt;
}

std::vector<NodeId> RoutingTable::path(NodeId src, NodeId dst) const {
  std::vector<NodeId> p{src};
  NodeId cur = src;
  while (cur != dst) {
    cur = next(cur, dst);
    if (cur == kNoNode || p.size() > n)
      throw std::logic_error("routing: broken path");
    p.push_back(cur);
  }
  return p;
}

std::vector<NodeId> caching_tree(const Topology& topo, const RoutingTable& routes,
                                 NodeId source) {
  if (source >= topo.n) throw std::invalid_argument("caching_tree: bad source");
  std::vector<NodeId> parent(topo.n, kNoNode);
  for (NodeId i = 0; i < topo.n; ++i)
    if (i != source) parent[i] = routes.next(i, source);
  return parent;
}

namespace {

std::vector<SizeMb> draw_capacities(Rng& rng, NodeId n, std::pair<SizeMb, SizeMb> range) {
  if (range.first <= 0 || range.second < range.first)
    throw std::invalid_argument("topology: bad capacity range");
  std::vector<SizeMb> caps(n);
  for (auto& c : caps) c = rng.uniform_int(range.first, range.second);
  return caps;
}

std::vector<std::int32_t> draw_subnets(Rng& rng, NodeId n,
                                       std::pair<std::int32_t, std::int32_t> range) {
  if (range.first < 0 || range.second < range.first)
    throw std::invalid_argument("topology: bad subnet range");
  std::vector<std::int32_t> subs(n);
  for (auto& s : subs)
    s = static_cast<std::int32_t>(rng.uniform_int(range.first, range.second));
  return subs;
}

}  // namespace

Topology build_random_topology(NodeId n, std::uint64_t seed,
                               std::pair<SizeMb, SizeMb> capacity_range,
                               std::pair<std::int32_t, std::int32_t> subnet_range) {
  if (n < 2) throw std::invalid_argument("random topology: need n >= 2");
  Rng rng(seed);
  // G(n,p) with p = 2 ln(n)/n stays sparse but connected w.h.p.; redraw the
  // edge set until connected.
  const double p = std::min(1.0, 2.0 * std::log(static_cast<double>(n)) / n);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = a + 1; b < n; ++b)
        if (rng.next_unit() < p) edges.emplace_back(a, b);
    Topology t;
    t.kind = TopologyKind::kRandom;
    t.n = n;
    t.edges = std::move(edges);
    t.capacity_mb = draw_capacities(rng, n, capacity_range);
    t.subnet_size = draw_subnets(rng, n, subnet_range);
    t.finalize();
    if (is_connected(t)) return t;
  }
  throw std::runtime_error("random topology: failed to produce a connected graph");
}

Topology build_small_world_topology(NodeId n, int mean_degree, double rewire_prob,
                                    std::uint64_t seed,
                                    std::pair<SizeMb, SizeMb> capacity_range,
                                    std::pair<std::int32_t, std::int32_t> subnet_range) {
  if (mean_degree < 2 || mean_degree % 2 != 0 || static_cast<NodeId>(mean_degree) >= n)
    throw std::invalid_argument("small world: mean_degree must be even, in [2, n)");
  if (rewire_prob < 0.0 || rewire_prob > 1.0)
    throw std::invalid_argument("small world: rewire_prob must be in [0,1]");
  Rng rng(seed);
  const int half = mean_degree / 2;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    // Ring lattice, then Watts-Strogatz rewiring of each lattice edge.
    std::set<std::pair<NodeId, NodeId>> edge_set;
    auto add = [&](NodeId a, NodeId b) {
      if (a > b) std::swap(a, b);
      return edge_set.insert({a, b}).second;
    };
    auto has = [&](NodeId a, NodeId b) {
      if (a > b) std::swap(a, b);
      return edge_set.count({a, b}) > 0;
    };
    for (NodeId u = 0; u < n; ++u)
      for (int d = 1; d <= half; ++d) add(u, (u + d) % n);
    for (NodeId u = 0; u < n; ++u) {
      for (int d = 1; d <= half; ++d) {
        const NodeId v = (u + d) % n;
        if (rng.next_unit() >= rewire_prob) continue;
        if (!has(u, v)) continue;  // already rewired away
        // Pick a fresh endpoint; skip if the node is saturated.
        NodeId w = kNoNode;
        for (int tries = 0; tries < 64; ++tries) {
          NodeId cand = static_cast<NodeId>(rng.uniform_int(0, n - 1));
          if (cand != u && !has(u, cand)) {
            w = cand;
            break;
          }
        }
        if (w == kNoNode) continue;
        edge_set.erase({std::min(u, v), std::max(u, v)});
        add(u, w);
      }
    }
    Topology t;
    t.kind = TopologyKind::kSmallWorld;
    t.n = n;
    t.edges.assign(edge_set.begin(), edge_set.end());
    t.capacity_mb = draw_capacities(rng, n, capacity_range);
    t.subnet_size = draw_subnets(rng, n, subnet_range);
    t.finalize();
    if (is_connected(t)) return t;
  }
  throw std::runtime_error("small world: failed to produce a connected graph");
}

Topology build_lower_bound_star(NodeId n_leaves, SizeMb cache_capacity_mb) {
  if (n_leaves < 1 || (n_leaves & (n_leaves - 1)) != 0)
    throw std::invalid_argument("lower bound star: n must be a power of two");
  // Node 0 = source, node 1 = the only caching node, 2..n+1 = requester leaves.
  const NodeId n = n_leaves + 2;
  std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}};
  for (NodeId leaf = 2; leaf < n; ++leaf) edges.emplace_back(1, leaf);
  std::vector<SizeMb> caps(n, 0);
  caps[1] = cache_capacity_mb;
  std::vector<std::int32_t> subs(n, 0);
  for (NodeId leaf = 2; leaf < n; ++leaf) subs[leaf] = 1;
  Topology t = make_topology(TopologyKind::kLowerBoundStar, n, std::move(edges),
                             std::move(caps), std::move(subs));
  return t;
}

std::string export_topology(const Topology& topo) {
  std::ostringstream out;
  out << "# crcsim topology v1\n";
  out << static_cast<int>(topo.kind) << ' ' << topo.n << '\n';
  for (NodeId i = 0; i < topo.n; ++i) {
    out << i << ' ' << topo.capacity_mb[i] << ' ' << topo.subnet_size[i];
    for (NodeId v : topo.adjacency[i])
      if (v > i) out << ' ' << v;
    out << '\n';
  }
  return out.str();
}

Topology import_topology(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# crcsim topology", 0) != 0)
    throw std::invalid_argument("topology import: bad header");
  int kind_raw = 0;
  NodeId n = 0;
  in >> kind_raw >> n;
  Topology t;
  t.kind = static_cast<TopologyKind>(kind_raw);
  t.n = n;
  t.capacity_mb.assign(n, 0);
  t.subnet_size.assign(n, 0);
  std::getline(in, line);
  for (NodeId i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw std::invalid_argument("topology import: truncated");
    std::istringstream ls(line);
    NodeId id;
    if (!(ls >> id) || id != i) throw std::invalid_argument("topology import: bad node id");
    if (!(ls >> t.capacity_mb[i] >> t.subnet_size[i]))
      throw std::invalid_argument("topology import: bad node record");
    NodeId v;
    while (ls >> v) t.edges.emplace_back(i, v);
  }
  t.finalize();
  return t;
}

}  // namespace crcsim
