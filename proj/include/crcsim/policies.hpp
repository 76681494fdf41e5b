#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "crcsim/cache_state.hpp"
#include "crcsim/expectation.hpp"
#include "crcsim/rng.hpp"
#include "crcsim/topology.hpp"
#include "crcsim/workload.hpp"

namespace crcsim {

enum class PolicyKind {
  kCrc,
  kCrcV2,
  kReplacementCrc,
  kAllCache,
  kRandomV1,
  kRandomV2,
  kLru,
  kRandomReplacement,
  kCcn,
};

const char* to_string(PolicyKind kind);
std::optional<PolicyKind> parse_policy(const std::string& name);

// Expectation-coordinated policies: header walk, upstream deductions and
// scheduled flushes at the content's window end.
inline bool is_crc_family(PolicyKind k) {
  return k == PolicyKind::kCrc || k == PolicyKind::kCrcV2 ||
         k == PolicyKind::kReplacementCrc;
}
// Schemes that recycle space by replacing cached entries.
inline bool is_replacement_scheme(PolicyKind k) {
  return k == PolicyKind::kReplacementCrc || k == PolicyKind::kLru ||
         k == PolicyKind::kRandomReplacement || k == PolicyKind::kCcn;
}

struct Admission {
  NodeId node = 0;
  CacheEntry entry;
};
struct Eviction {
  NodeId node = 0;
  CacheEntry entry;  // state at eviction time
};

struct ServeResult {
  NodeId serving_node = 0;
  Hops hops_traveled = 0;
  bool local_hit = false;
  std::vector<Admission> admissions;
  std::vector<Eviction> evictions;

  double header_total() const {
    double h = 0.0;
    for (const auto& a : admissions) h += a.entry.frozen_demand;
    return h;
  }
};

// Cost-reward admission test: admit iff the window-integrated expected
// savings (slots x demand x distance) cover the integrated marginal cost,
// and the entry physically fits in every covered slot. The fit check is a
// safety net; under valid assumptions the cost test alone rejects first.
bool crc_decide(const NodeCache& cache, const CostParams& params, const Content& content,
                double effective_demand, Hops dist_to_copy, Slot t0,
                bool* safety_net_fired = nullptr);

struct ReplacementDecision {
  enum class Action { kAdmit, kReplace, kReject };
  Action action = Action::kReject;
  ContentId victim = 0;
};

// Admission test first; otherwise scores every cached entry k (and the
// candidate itself, meaning "do not cache") by remaining frozen value minus
// the cost of hosting the candidate in k's place, and replaces the argmin
// when it is not the candidate. Swaps that would overload any slot are
// excluded.
ReplacementDecision replacement_crc_decide(const NodeCache& cache, const CostParams& params,
                                           const Catalog& catalog, ContentId candidate,
                                           double effective_demand, Hops dist_to_copy,
                                           Slot t0);

// All mutable state owned by one simulation run.
class SimulationState {
 public:
  SimulationState(const Topology& topo, const RoutingTable& routes, const Catalog& catalog,
                  const DemandModel& demand, PolicyKind policy, CostParams params,
                  ExpectationTable expectations, std::uint64_t seed);

  const Topology& topo;
  const RoutingTable& routes;
  const Catalog& catalog;
  const DemandModel& demand;
  PolicyKind policy;
  CostParams params;
  ExpectationTable expectations;
  std::vector<NodeCache> caches;
  Rng rng;

  std::int64_t admissions_total = 0;
  std::int64_t evictions_total = 0;
  std::int64_t safety_net_rejects = 0;
  std::vector<NodeId> path_scratch;  // reused by the serve walk

  bool holds(NodeId node, ContentId content) const {
    return holds_flat_[static_cast<std::size_t>(content) * topo.n + node] != 0;
  }
  const std::vector<NodeId>& holders(ContentId content) const { return holders_[content]; }
  NodeId nearest_holder(NodeId from, ContentId content) const;

  void do_admit(NodeId node, const CacheEntry& entry);
  CacheEntry do_evict(NodeId node, ContentId content, Slot from_slot);
  void on_flushed(NodeId node, const CacheEntry& entry);
  void touch(NodeId node, ContentId content, Slot slot);

  // Replacement scoring with per-(node, slot) prefix reuse; same result as
  // replacement_crc_decide.
  ReplacementDecision decide_replacement(NodeId node, ContentId content,
                                         double effective_demand, Hops dist_to_copy,
                                         Slot t0);

  // Least-recently-requested cached content at `node`.
  ContentId lru_victim(NodeId node) const;
  ContentId random_victim(NodeId node);

  // Realized request count seen at `node` for `content` before now.
  std::int64_t seen_requests(NodeId node, ContentId content) const;
  void record_requests(NodeId node, ContentId content, std::int64_t count);

 private:
  struct ReplacementScratch {
    Slot t0 = -1;
    std::uint64_t version = ~0ull;
    std::vector<double> prefix;
  };

  bool uses_recency_ = false;
  Slot max_window_ = 1;
  std::vector<std::uint64_t> cache_version_;
  std::vector<ReplacementScratch> repl_scratch_;
  std::vector<std::vector<double>> exp_tables_;
  std::vector<std::uint8_t> holds_flat_;  // [content * n + node]
  std::vector<std::vector<NodeId>> holders_;
  std::vector<std::set<std::pair<Slot, ContentId>>> recency_;  // LRU order per node
  std::unordered_map<std::uint64_t, std::int64_t> seen_;
};

// Serves one aggregated request through the bound policy: walks the fixed
// path to the first replica (protocol decisions at every node below it),
// applies admissions/evictions/deductions, and reports where the request was
// served from. `count` only feeds the realized-popularity counters.
ServeResult en_route_serve(SimulationState& st, NodeId requester, ContentId content,
                           Slot t0, std::int64_t count);

}  // namespace crcsim
