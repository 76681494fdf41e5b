#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "crcsim/topology.hpp"
#include "crcsim/workload.hpp"

namespace crcsim {

// Per-(node, content) expectation state. expected(i,j) starts as the sum of
// own rates over i's subtree in the caching tree rooted at the content's
// source, and is reduced while downstream copies absorb that demand. Every
// reduction is recorded so it can be reversed when the copy leaves.
class ExpectationTable {
 public:
  ExpectationTable() = default;
  ExpectationTable(const Topology& topo, const RoutingTable& routes,
                   const Catalog& catalog, const DemandModel& demand);

  double expected(NodeId node, ContentId content) const {
    return expected_[index(node, content)];
  }
  double own_rate(NodeId node, ContentId content) const {
    return own_rate_[index(node, content)];
  }
  double initial(NodeId node, ContentId content) const {
    return initial_[index(node, content)];
  }

  // Subtracts `amount` from every node strictly between `cacher` and
  // `serving_node` on the fixed path toward `source`. The record is reversed
  // by restore_on_expiry(restore_at) or restore_for_copy.
  void deduct_upstream(const RoutingTable& routes, NodeId cacher, ContentId content,
                       double amount, Slot restore_at, NodeId serving_node,
                       NodeId source);

  // Reverses every record whose restore slot equals `slot`. Idempotent:
  // applied records are dropped.
  void restore_on_expiry(Slot slot);

  // Early reversal when a copy is evicted by a replacement policy.
  void restore_for_copy(NodeId cacher, ContentId content);

  // Multiplies each expectation by an independent uniform factor in
  // [1-relative_error, 1+relative_error]. Decision-side perturbation only.
  void apply_noise(double relative_error, std::uint64_t seed);

  // Current value plus outstanding deductions must equal the initial value.
  bool conservation_ok(double tol = 1e-6) const;

  std::string dump() const;  // node content own expected

  NodeId nodes() const { return n_; }
  ContentId contents() const { return m_; }

 private:
  std::size_t index(NodeId i, ContentId j) const {
    return static_cast<std::size_t>(j) * n_ + i;
  }

  struct Deduction {
    double amount = 0.0;
    Slot restore_at = 0;
    std::vector<NodeId> ancestors;
  };
  using CopyKey = std::uint64_t;  // cacher << 32 | content
  static CopyKey key(NodeId cacher, ContentId content) {
    return (static_cast<std::uint64_t>(cacher) << 32) | content;
  }

  void apply(ContentId content, const Deduction& d, double sign);

  NodeId n_ = 0;
  ContentId m_ = 0;
  bool noisy_ = false;
  std::vector<double> own_rate_;
  std::vector<double> expected_;
  std::vector<double> initial_;
  std::unordered_map<CopyKey, Deduction> records_;
  std::map<Slot, std::vector<CopyKey>> by_restore_slot_;
};

}  // namespace crcsim
