#include "crcsim/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crcsim {

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kCrc: return "crc";
    case PolicyKind::kCrcV2: return "crc_v2";
    case PolicyKind::kReplacementCrc: return "replacement_crc";
    case PolicyKind::kAllCache: return "all_cache";
    case PolicyKind::kRandomV1: return "random_v1";
    case PolicyKind::kRandomV2: return "random_v2";
    case PolicyKind::kLru: return "lru";
    case PolicyKind::kRandomReplacement: return "random_replacement";
    case PolicyKind::kCcn: return "ccn";
  }
  return "?";
}

std::optional<PolicyKind> parse_policy(const std::string& name) {
  for (PolicyKind k :
       {PolicyKind::kCrc, PolicyKind::kCrcV2, PolicyKind::kReplacementCrc,
        PolicyKind::kAllCache, PolicyKind::kRandomV1, PolicyKind::kRandomV2,
        PolicyKind::kLru, PolicyKind::kRandomReplacement, PolicyKind::kCcn})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

bool crc_decide(const NodeCache& cache, const CostParams& params, const Content& content,
                double effective_demand, Hops dist_to_copy, Slot t0,
                bool* safety_net_fired) {
  if (safety_net_fired) *safety_net_fired = false;
  if (cache.capacity() == 0) return false;
  const Slot remaining = content.remaining(t0);
  if (remaining < 0) return false;
  const double savings =
      static_cast<double>(remaining + 1) * effective_demand * dist_to_copy;
  const double cost =
      cache.aggregate_admission_cost(params, content.size_mb, t0, remaining, savings);
  if (savings < cost) return false;
  if (!cache.fits(content.size_mb, t0, t0 + remaining)) {
    if (safety_net_fired) *safety_net_fired = true;
    return false;
  }
  return true;
}

namespace {

// Victim scoring against prefix sums of 2^(scale*occupancy) over the
// candidate's window. Assumes the occupancy profile is non-increasing from t0
// on, which holds at decision time because every resident entry has been
// occupying the cache since before t0. That makes every range-max lookup a
// single occupied() read, and the swapped-load cost of victim k differs from
// the shared prefix only by a 2^(-scale*r_k) factor on k's resident slots.
ReplacementDecision replacement_core(const NodeCache& cache, const CostParams& params,
                                     const Catalog& catalog, ContentId candidate,
                                     double effective_demand, Hops dist_to_copy, Slot t0,
                                     const std::vector<double>& prefix,
                                     std::vector<double>& exp_table) {
  ReplacementDecision decision;
  const Content& c = catalog.contents[candidate];
  if (crc_decide(cache, params, c, effective_demand, dist_to_copy, t0)) {
    decision.action = ReplacementDecision::Action::kAdmit;
    return decision;
  }
  if (cache.capacity() == 0 || c.size_mb > cache.capacity()) return decision;
  const Slot remaining = c.remaining(t0);
  if (remaining < 0) return decision;
  const Slot last = std::min<Slot>(t0 + remaining, cache.horizon() - 1);
  const int window = static_cast<int>(last - t0 + 1);
  const double cap = static_cast<double>(cache.capacity());
  const double scale = params.log2_mu / cap;
  const double r_j = static_cast<double>(c.size_mb);

  auto exp_of = [&](SizeMb size) {  // 2^(scale*size), memoized per size
    if (static_cast<std::size_t>(size) < exp_table.size()) {
      double& v = exp_table[size];
      if (v == 0.0) v = std::exp2(scale * static_cast<double>(size));
      return v;
    }
    return std::exp2(scale * static_cast<double>(size));
  };

  const double pw = prefix[window];
  // Keep-out option: the candidate's own value against the cost as-is.
  double best_diff =
      static_cast<double>(remaining + 1) * effective_demand * dist_to_copy -
      r_j * (pw - window);
  ContentId best_id = candidate;

  const SizeMb occ_now = cache.occupied(t0);
  const double two_rj = exp_of(c.size_mb);
  for (const auto& [k, e] : cache.entries()) {
    // Victim resident through window index i_m - 1.
    const Slot e_last = std::min<Slot>(e.expiry, last);
    const int i_m = e_last < t0 ? 0 : static_cast<int>(e_last - t0 + 1);
    if (occ_now + c.size_mb - e.size_mb > cache.capacity()) continue;
    if (i_m < window && cache.occupied(t0 + i_m) + c.size_mb > cache.capacity()) continue;
    const double cost =
        r_j * (two_rj * (prefix[i_m] / exp_of(e.size_mb) + (pw - prefix[i_m])) - window);
    const Slot value_slots =
        std::max<Slot>(0, std::min(e.expiry, cache.horizon() - 1) - t0 + 1);
    const double value =
        static_cast<double>(value_slots) * e.frozen_demand * e.frozen_distance;
    const double diff = value - cost;
    if (diff < best_diff || (diff == best_diff && k < best_id)) {
      best_diff = diff;
      best_id = k;
    }
  }
  if (best_id != candidate) {
    decision.action = ReplacementDecision::Action::kReplace;
    decision.victim = best_id;
  }
  return decision;
}

std::vector<double> build_cost_prefix(const NodeCache& cache, const CostParams& params,
                                      Slot t0, Slot span_slots) {
  const double scale = params.log2_mu / static_cast<double>(cache.capacity());
  std::vector<double> prefix(span_slots + 1, 0.0);
  for (Slot i = 0; i < span_slots; ++i)
    prefix[i + 1] =
        prefix[i] + std::exp2(scale * static_cast<double>(cache.occupied(t0 + i)));
  return prefix;
}

}  // namespace

ReplacementDecision replacement_crc_decide(const NodeCache& cache, const CostParams& params,
                                           const Catalog& catalog, ContentId candidate,
                                           double effective_demand, Hops dist_to_copy,
                                           Slot t0) {
  const Content& c = catalog.contents[candidate];
  if (cache.capacity() == 0) return {};
  const Slot remaining = std::max<Slot>(0, c.remaining(t0));
  const Slot last = std::min<Slot>(t0 + remaining, cache.horizon() - 1);
  const Slot window = std::max<Slot>(0, last - t0 + 1);
  const std::vector<double> prefix = build_cost_prefix(cache, params, t0, window);
  std::vector<double> exp_table;
  return replacement_core(cache, params, catalog, candidate, effective_demand,
                          dist_to_copy, t0, prefix, exp_table);
}

SimulationState::SimulationState(const Topology& topo_in, const RoutingTable& routes_in,
                                 const Catalog& catalog_in, const DemandModel& demand_in,
                                 PolicyKind policy_in, CostParams params_in,
                                 ExpectationTable expectations_in, std::uint64_t seed)
    : topo(topo_in),
      routes(routes_in),
      catalog(catalog_in),
      demand(demand_in),
      policy(policy_in),
      params(params_in),
      expectations(std::move(expectations_in)),
      rng(seed) {
  caches.reserve(topo.n);
  const bool scheduled = is_crc_family(policy_in);
  for (NodeId i = 0; i < topo.n; ++i)
    caches.emplace_back(i, topo.capacity_mb[i], catalog.horizon_slots, scheduled);
  uses_recency_ = policy == PolicyKind::kLru || policy == PolicyKind::kCcn ||
                  policy == PolicyKind::kRandomReplacement;
  max_window_ = catalog.max_effective_duration();
  cache_version_.assign(topo.n, 0);
  if (policy == PolicyKind::kReplacementCrc) {
    repl_scratch_.resize(topo.n);
    SizeMb max_size = 1;
    for (const Content& c : catalog.contents) max_size = std::max(max_size, c.size_mb);
    exp_tables_.assign(topo.n, std::vector<double>(static_cast<std::size_t>(max_size) + 1, 0.0));
  }
  holds_flat_.assign(catalog.contents.size() * static_cast<std::size_t>(topo.n), 0);
  holders_.assign(catalog.contents.size(), {});
  recency_.assign(topo.n, {});
}

NodeId SimulationState::nearest_holder(NodeId from, ContentId content) const {
  NodeId best = catalog.contents[content].source;
  Hops best_dist = routes.distance(from, best);
  for (NodeId h : holders_[content]) {
    const Hops d = routes.distance(from, h);
    if (d < best_dist || (d == best_dist && h < best)) {
      best = h;
      best_dist = d;
    }
  }
  return best;
}

void SimulationState::do_admit(NodeId node, const CacheEntry& entry) {
  if (entry.content >= holders_.size())
    throw std::invalid_argument("do_admit: content id outside the catalog");
  caches[node].admit(entry);
  ++cache_version_[node];
  holds_flat_[static_cast<std::size_t>(entry.content) * topo.n + node] = 1;
  holders_[entry.content].push_back(node);
  if (uses_recency_) recency_[node].insert({entry.last_touch, entry.content});
  ++admissions_total;
}

CacheEntry SimulationState::do_evict(NodeId node, ContentId content, Slot from_slot) {
  const CacheEntry* e = caches[node].find(content);
  if (!e) throw std::logic_error("evict: content not cached");
  if (uses_recency_) recency_[node].erase({e->last_touch, content});
  CacheEntry entry = caches[node].evict(content, from_slot);
  ++cache_version_[node];
  holds_flat_[static_cast<std::size_t>(content) * topo.n + node] = 0;
  auto& h = holders_[content];
  h.erase(std::find(h.begin(), h.end(), node));
  expectations.restore_for_copy(node, content);
  ++evictions_total;
  return entry;
}

void SimulationState::on_flushed(NodeId node, const CacheEntry& entry) {
  holds_flat_[static_cast<std::size_t>(entry.content) * topo.n + node] = 0;
  if (uses_recency_) recency_[node].erase({entry.last_touch, entry.content});
  auto& h = holders_[entry.content];
  auto it = std::find(h.begin(), h.end(), node);
  if (it != h.end()) h.erase(it);
}

void SimulationState::touch(NodeId node, ContentId content, Slot slot) {
  // Recency only drives LRU-style eviction; skip the bookkeeping elsewhere.
  if (!uses_recency_) return;
  const CacheEntry* e = caches[node].find(content);
  if (!e) return;
  recency_[node].erase({e->last_touch, content});
  caches[node].touch(content, slot);
  recency_[node].insert({slot, content});
}

ReplacementDecision SimulationState::decide_replacement(NodeId node, ContentId content,
                                                        double effective_demand,
                                                        Hops dist_to_copy, Slot t0) {
  if (caches[node].capacity() == 0) return {};
  ReplacementScratch& sc = repl_scratch_[node];
  if (sc.t0 != t0 || sc.version != cache_version_[node]) {
    const Slot span = std::min<Slot>(max_window_ + 1, caches[node].horizon() - t0);
    sc.prefix = build_cost_prefix(caches[node], params, t0, span);
    sc.t0 = t0;
    sc.version = cache_version_[node];
  }
  return replacement_core(caches[node], params, catalog, content, effective_demand,
                          dist_to_copy, t0, sc.prefix, exp_tables_[node]);
}

ContentId SimulationState::lru_victim(NodeId node) const {
  if (recency_[node].empty()) throw std::logic_error("lru_victim: empty cache");
  return recency_[node].begin()->second;
}

ContentId SimulationState::random_victim(NodeId node) {
  const auto& rec = recency_[node];
  if (rec.empty()) throw std::logic_error("random_victim: empty cache");
  // Uniform over the cached set; recency order just gives a stable iteration.
  std::size_t idx = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(rec.size()) - 1));
  auto it = rec.begin();
  std::advance(it, idx);
  return it->second;
}

std::int64_t SimulationState::seen_requests(NodeId node, ContentId content) const {
  auto it = seen_.find((static_cast<std::uint64_t>(node) << 32) | content);
  return it == seen_.end() ? 0 : it->second;
}

void SimulationState::record_requests(NodeId node, ContentId content, std::int64_t count) {
  seen_[(static_cast<std::uint64_t>(node) << 32) | content] += count;
}

namespace {

CacheEntry make_entry(const SimulationState& st, ContentId content, Slot t0, Hops dist,
                      double frozen_demand) {
  const Content& c = st.catalog.contents[content];
  CacheEntry e;
  e.content = content;
  e.admitted_at = t0;
  e.expiry = is_crc_family(st.policy) ? c.window_end : kNeverExpires;
  e.size_mb = c.size_mb;
  e.frozen_distance = dist;
  e.frozen_demand = frozen_demand;
  e.last_touch = t0;
  return e;
}

// Evicts until `size` fits across the entry's whole residency; returns false
// (leaving the cache untouched beyond prior evictions) when impossible.
bool admit_with_eviction(SimulationState& st, ServeResult& res, NodeId node,
                         const CacheEntry& entry, bool random_victim) {
  NodeCache& cache = st.caches[node];
  if (entry.size_mb > cache.capacity()) return false;
  const Slot to = entry.expiry == kNeverExpires ? cache.horizon() - 1
                                                : std::min<Slot>(entry.expiry, cache.horizon() - 1);
  while (!cache.fits(entry.size_mb, entry.admitted_at, to)) {
    if (cache.entries().empty()) return false;
    const ContentId victim =
        random_victim ? st.random_victim(node) : st.lru_victim(node);
    res.evictions.push_back({node, st.do_evict(node, victim, entry.admitted_at)});
  }
  st.do_admit(node, entry);
  res.admissions.push_back({node, entry});
  return true;
}

// Protocol walk shared by the cost-reward family. `path` runs requester ->
// source; `w_idx` indexes the serving node. Decisions run bottom-up with the
// accumulated header subtracted from each node's expectation; admitted nodes
// add their (adjusted) expectation to the header and afterwards deduct it
// from every node strictly between themselves and the serving node.
void crc_walk(SimulationState& st, ServeResult& res, const std::vector<NodeId>& path,
              std::size_t w_idx, ContentId content, Slot t0) {
  const Content& c = st.catalog.contents[content];
  const NodeId w = path[w_idx];
  double header = 0.0;
  for (std::size_t idx = 0; idx < w_idx; ++idx) {
    const NodeId u = path[idx];
    if (st.topo.capacity_mb[u] == 0) continue;
    const double effective =
        std::max(0.0, st.expectations.expected(u, content) - header);
    const Hops dist = static_cast<Hops>(w_idx - idx);
    bool admit = false;
    if (st.policy == PolicyKind::kReplacementCrc) {
      const ReplacementDecision d =
          st.decide_replacement(u, content, effective, dist, t0);
      if (d.action == ReplacementDecision::Action::kReplace) {
        res.evictions.push_back({u, st.do_evict(u, d.victim, t0)});
        admit = true;
      } else {
        admit = d.action == ReplacementDecision::Action::kAdmit;
      }
    } else {
      bool safety = false;
      admit = crc_decide(st.caches[u], st.params, c, effective, dist, t0, &safety);
      if (safety) ++st.safety_net_rejects;
    }
    if (admit) {
      const CacheEntry entry = make_entry(st, content, t0, dist, effective);
      st.do_admit(u, entry);
      res.admissions.push_back({u, entry});
      header += effective;
    }
  }
  for (const auto& a : res.admissions)
    st.expectations.deduct_upstream(st.routes, a.node, content, a.entry.frozen_demand,
                                    c.window_end + 1, w, c.source);
}

}  // namespace

ServeResult en_route_serve(SimulationState& st, NodeId requester, ContentId content,
                           Slot t0, std::int64_t count) {
  const Content& c = st.catalog.contents[content];
  const bool wants_counters =
      st.policy == PolicyKind::kRandomV1 || st.policy == PolicyKind::kRandomV2;
  ServeResult res;

  if (st.holds(requester, content)) {
    st.touch(requester, content, t0);
    res.serving_node = requester;
    res.hops_traveled = 0;
    res.local_hit = true;
    if (wants_counters) st.record_requests(requester, content, count);
    return res;
  }

  std::vector<NodeId>& path = st.path_scratch;
  path.clear();
  {
    NodeId cur = requester;
    path.push_back(cur);
    while (cur != c.source) {
      cur = st.routes.next(cur, c.source);
      path.push_back(cur);
    }
  }
  std::size_t w_idx = path.size() - 1;
  for (std::size_t idx = 1; idx + 1 < path.size(); ++idx) {
    if (st.holds(path[idx], content)) {
      w_idx = idx;
      break;
    }
  }
  const NodeId w = path[w_idx];
  res.serving_node = w;
  res.hops_traveled = static_cast<Hops>(w_idx);
  st.touch(w, content, t0);

  switch (st.policy) {
    case PolicyKind::kCrc:
    case PolicyKind::kReplacementCrc:
      crc_walk(st, res, path, w_idx, content, t0);
      break;
    case PolicyKind::kCrcV2: {
      // Same decisions and bookkeeping as v1; only the delivery distance uses
      // the globally nearest replica.
      const NodeId nearest = st.nearest_holder(requester, content);
      crc_walk(st, res, path, w_idx, content, t0);
      res.serving_node = nearest;
      res.hops_traveled = st.routes.distance(requester, nearest);
      break;
    }
    case PolicyKind::kAllCache: {
      if (st.topo.capacity_mb[requester] > 0) {
        const CacheEntry entry =
            make_entry(st, content, t0, static_cast<Hops>(w_idx),
                       st.expectations.expected(requester, content));
        if (st.caches[requester].fits(entry.size_mb, t0, st.caches[requester].horizon() - 1)) {
          st.do_admit(requester, entry);
          res.admissions.push_back({requester, entry});
        }
      }
      break;
    }
    case PolicyKind::kRandomV1:
    case PolicyKind::kRandomV2: {
      if (st.topo.capacity_mb[requester] > 0 && st.topo.subnet_size[requester] > 0) {
        const double pop =
            static_cast<double>(st.seen_requests(requester, content)) /
            static_cast<double>(st.topo.subnet_size[requester]);
        double threshold = pop;
        if (st.policy == PolicyKind::kRandomV2) {
          const NodeCache& cache = st.caches[requester];
          const double residual_fraction =
              static_cast<double>(cache.capacity() - cache.occupied(t0)) /
              static_cast<double>(cache.capacity());
          threshold *= residual_fraction;
        }
        if (threshold > 0.0 && st.rng.next_unit() <= threshold) {
          const CacheEntry entry =
              make_entry(st, content, t0, static_cast<Hops>(w_idx),
                         st.expectations.expected(requester, content));
          if (st.caches[requester].fits(entry.size_mb, t0,
                                        st.caches[requester].horizon() - 1)) {
            st.do_admit(requester, entry);
            res.admissions.push_back({requester, entry});
          }
        }
      }
      break;
    }
    case PolicyKind::kLru:
    case PolicyKind::kRandomReplacement: {
      const bool random_victim = st.policy == PolicyKind::kRandomReplacement;
      for (std::size_t idx = 0; idx < w_idx; ++idx) {
        const NodeId u = path[idx];
        if (st.topo.capacity_mb[u] == 0) continue;
        const CacheEntry entry =
            make_entry(st, content, t0, static_cast<Hops>(w_idx - idx),
                       st.expectations.expected(u, content));
        admit_with_eviction(st, res, u, entry, random_victim);
      }
      break;
    }
    case PolicyKind::kCcn: {
      // Interest flooding resolves the nearest replica; the data packet then
      // travels back and every node on that path caches it (LRU when full).
      const NodeId nearest = st.nearest_holder(requester, content);
      res.serving_node = nearest;
      res.hops_traveled = st.routes.distance(requester, nearest);
      st.touch(nearest, content, t0);
      path.clear();
      {
        NodeId cur = requester;
        path.push_back(cur);
        while (cur != nearest) {
          cur = st.routes.next(cur, nearest);
          path.push_back(cur);
        }
      }
      for (std::size_t idx = 0; idx + 1 < path.size(); ++idx) {
        const NodeId u = path[idx];
        if (st.topo.capacity_mb[u] == 0) continue;
        const CacheEntry entry =
            make_entry(st, content, t0, static_cast<Hops>(path.size() - 1 - idx),
                       st.expectations.expected(u, content));
        admit_with_eviction(st, res, u, entry, /*random_victim=*/false);
      }
      break;
    }
  }

  if (wants_counters) st.record_requests(requester, content, count);
  return res;
}

}  // namespace crcsim
