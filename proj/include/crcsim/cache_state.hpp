#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "crcsim/expectation.hpp"
#include "crcsim/topology.hpp"
#include "crcsim/workload.hpp"

namespace crcsim {

// Entries carry their admission-time snapshot: the distance to the copy that
// served the triggering request and the expectation the decision used. Both
// stay fixed for the life of the entry.
inline constexpr Slot kNeverExpires = std::numeric_limits<Slot>::max();

struct CacheEntry {
  ContentId content = 0;
  Slot admitted_at = 0;
  Slot expiry = 0;  // last occupied slot, inclusive; kNeverExpires = until evicted
  SizeMb size_mb = 0;
  Hops frozen_distance = 1;
  double frozen_demand = 0.0;
  Slot last_touch = 0;
};

// Cost-function constants: cost_base = 2 * (caching_nodes * max duration *
// density bound + 1). Costs are evaluated as exp2(load * log2(cost_base)), so
// log2_mu is the working representation.
struct CostParams {
  int caching_nodes = 1;
  Slot max_duration = 1;
  double density_bound = 1.0;  // F, never below 1
  double mu = 4.0;
  double log2_mu = 2.0;
};

CostParams make_cost_params(int caching_nodes, Slot max_duration, double density_bound);

// Per-node cache with a per-slot occupancy ledger over the whole horizon.
// The ledger is what makes the aggregate admission cost and the capacity
// invariant exact in the presence of scheduled flushes. Replacement-style
// policies hold entries with no scheduled flush, so their forward profile is
// flat: `scheduled_profile = false` switches to O(1) occupancy updates with
// history committed once per slot (commit_slot) instead of interval writes.
class NodeCache {
 public:
  NodeCache() = default;
  NodeCache(NodeId node, SizeMb capacity_mb, Slot horizon_slots,
            bool scheduled_profile = true);

  NodeId node() const { return node_; }
  SizeMb capacity() const { return capacity_mb_; }
  Slot horizon() const { return static_cast<Slot>(occupied_mb_.size()); }

  bool holds(ContentId content) const { return entries_.count(content) > 0; }
  const CacheEntry* find(ContentId content) const;
  const std::unordered_map<ContentId, CacheEntry>& entries() const { return entries_; }

  SizeMb occupied(Slot slot) const;
  double relative_load(Slot slot) const;
  double cost(const CostParams& params, Slot slot) const;

  // Sum over slots t0..t0+duration of (size/capacity) * cost(slot), with the
  // candidate not yet admitted. `stop_above`: once the partial sum exceeds it
  // the exact value no longer matters and the scan stops (admission compares
  // against a fixed left-hand side).
  double aggregate_admission_cost(const CostParams& params, SizeMb candidate_mb,
                                  Slot t0, Slot duration,
                                  double stop_above = std::numeric_limits<double>::infinity()) const;

  bool fits(SizeMb size_mb, Slot from, Slot to) const;

  void admit(const CacheEntry& entry);  // throws if any covered slot overflows
  std::vector<CacheEntry> flush_expired(Slot slot);  // removes expiry < slot
  // Removes one entry, freeing its occupancy from `from_slot` onward.
  CacheEntry evict(ContentId content, Slot from_slot);

  void touch(ContentId content, Slot slot);
  std::int64_t live_count(Slot slot) const;  // entries whose span covers slot

  // Flat-profile mode only: freezes the current total as this slot's history.
  void commit_slot(Slot slot);

 private:
  NodeId node_ = 0;
  SizeMb capacity_mb_ = 0;
  bool scheduled_profile_ = true;
  SizeMb flat_total_ = 0;
  Slot committed_ = 0;
  std::int64_t finite_expiry_entries_ = 0;
  std::vector<SizeMb> occupied_mb_;
  std::unordered_map<ContentId, CacheEntry> entries_;
  std::map<Slot, std::vector<ContentId>> by_expiry_;
};

// Assumption scan over a built instance. The density bound F is measured as
// the max of expected(i,j) * dist(i, source_j) / (n * size_j * duration_j)
// over caching-capable nodes; the lower-bound side of the same ratio and the
// size bound size_j <= min capacity / log2(mu) are reported.
struct AssumptionReport {
  int caching_nodes = 1;
  Slot max_duration = 1;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double density_bound = 1.0;  // max(1, max_ratio)
  double mu = 0.0;
  double log2_mu = 0.0;
  SizeMb min_capacity_mb = 0;
  SizeMb max_content_mb = 0;
  bool density_lower_ok = false;
  bool size_bound_ok = false;
  bool mu_in_range = false;  // log2(mu) <= 900 so costs stay inside a double
  NodeId worst_lower_node = kNoNode;
  ContentId worst_lower_content = 0;

  bool hard_ok() const { return size_bound_ok && mu_in_range; }
};

AssumptionReport validate_assumptions(const Topology& topo, const RoutingTable& routes,
                                      const Catalog& catalog,
                                      const ExpectationTable& expectations);

CostParams cost_params_from_report(const AssumptionReport& report);

}  // namespace crcsim
