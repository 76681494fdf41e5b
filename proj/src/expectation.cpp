#include "crcsim/expectation.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "crcsim/rng.hpp"

namespace crcsim {

ExpectationTable::ExpectationTable(const Topology& topo, const RoutingTable& routes,
                                   const Catalog& catalog, const DemandModel& demand)
    : n_(topo.n), m_(static_cast<ContentId>(catalog.contents.size())) {
  own_rate_.assign(static_cast<std::size_t>(n_) * m_, 0.0);
  expected_.assign(static_cast<std::size_t>(n_) * m_, 0.0);
  for (ContentId j = 0; j < m_; ++j) {
    const NodeId source = catalog.contents[j].source;
    for (NodeId i = 0; i < n_; ++i) {
      const double w = demand.rate(topo, catalog, i, j);
      own_rate_[index(i, j)] = w;
      if (w == 0.0) continue;
      // Accumulate w at i and every ancestor on the path to the source.
      NodeId u = i;
      while (true) {
        expected_[index(u, j)] += w;
        if (u == source) break;
        u = routes.next(u, source);
      }
    }
  }
  initial_ = expected_;
}

void ExpectationTable::deduct_upstream(const RoutingTable& routes, NodeId cacher,
                                       ContentId content, double amount, Slot restore_at,
                                       NodeId serving_node, NodeId source) {
  if (amount <= 0.0) return;
  Deduction d;
  d.amount = amount;
  d.restore_at = restore_at;
  // Walk toward the source so the node set matches the request's en-route
  // path exactly (shortest-path ties could otherwise pick a different route
  // to the serving node).
  NodeId u = cacher;
  while (u != serving_node) {
    if (u == source)
      throw std::logic_error("expectation: serving node not on the path to the source");
    u = routes.next(u, source);
    if (u == serving_node) break;
    d.ancestors.push_back(u);
  }
  if (d.ancestors.empty()) return;
  apply(content, d, -1.0);
  const CopyKey k = key(cacher, content);
  if (records_.count(k))
    throw std::logic_error("expectation: duplicate deduction record for a live copy");
  by_restore_slot_[restore_at].push_back(k);
  records_.emplace(k, std::move(d));
}

void ExpectationTable::apply(ContentId content, const Deduction& d, double sign) {
  for (NodeId u : d.ancestors) {
    double& e = expected_[index(u, content)];
    e += sign * d.amount;
    // Under injected noise the subtree-sum structure no longer holds, so a
    // negative here is expected and simply clamped.
    if (e < -1e-9 && !noisy_)
      throw std::logic_error("expectation: deduction drove a value negative");
    if (e < 0.0) e = 0.0;
  }
}

void ExpectationTable::restore_on_expiry(Slot slot) {
  auto it = by_restore_slot_.find(slot);
  if (it == by_restore_slot_.end()) return;
  for (CopyKey k : it->second) {
    auto rec = records_.find(k);
    if (rec == records_.end()) continue;  // already restored by an eviction
    apply(static_cast<ContentId>(k & 0xffffffffULL), rec->second, +1.0);
    records_.erase(rec);
  }
  by_restore_slot_.erase(it);
}

void ExpectationTable::restore_for_copy(NodeId cacher, ContentId content) {
  auto rec = records_.find(key(cacher, content));
  if (rec == records_.end()) return;
  apply(content, rec->second, +1.0);
  records_.erase(rec);
}

void ExpectationTable::apply_noise(double relative_error, std::uint64_t seed) {
  if (relative_error < 0.0 || relative_error > 1.0)
    throw std::invalid_argument("apply_noise: relative_error must be in [0,1]");
  if (relative_error == 0.0) return;
  if (!records_.empty())
    throw std::logic_error("apply_noise: only valid on a freshly initialized table");
  Rng rng(seed);
  for (auto& e : expected_) {
    e *= rng.uniform_real(1.0 - relative_error, 1.0 + relative_error);
    if (e < 0.0) e = 0.0;
  }
  initial_ = expected_;
  noisy_ = true;
}

bool ExpectationTable::conservation_ok(double tol) const {
  if (noisy_) return true;  // clamping makes the ledger non-reversible
  std::vector<double> sum = expected_;
  for (const auto& [k, d] : records_) {
    const ContentId j = static_cast<ContentId>(k & 0xffffffffULL);
    for (NodeId u : d.ancestors) sum[index(u, j)] += d.amount;
  }
  for (std::size_t idx = 0; idx < sum.size(); ++idx)
    if (std::abs(sum[idx] - initial_[idx]) > tol) return false;
  return true;
}

std::string ExpectationTable::dump() const {
  std::ostringstream out;
  out << "node content own expected\n";
  for (NodeId i = 0; i < n_; ++i)
    for (ContentId j = 0; j < m_; ++j)
      if (own_rate(i, j) != 0.0 || expected(i, j) != 0.0)
        out << i << ' ' << j << ' ' << own_rate(i, j) << ' ' << expected(i, j) << '\n';
  return out.str();
}

}  // namespace crcsim
