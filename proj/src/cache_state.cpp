#include "crcsim/cache_state.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crcsim {

CostParams make_cost_params(int caching_nodes, Slot max_duration, double density_bound) {
  if (caching_nodes < 1 || max_duration < 1 || density_bound < 1.0)
    throw std::invalid_argument("cost params: need n >= 1, T >= 1, F >= 1");
  CostParams p;
  p.caching_nodes = caching_nodes;
  p.max_duration = max_duration;
  p.density_bound = density_bound;
  p.mu = 2.0 * (static_cast<double>(caching_nodes) * max_duration * density_bound + 1.0);
  p.log2_mu = std::log2(p.mu);
  return p;
}

NodeCache::NodeCache(NodeId node, SizeMb capacity_mb, Slot horizon_slots,
                     bool scheduled_profile)
    : node_(node), capacity_mb_(capacity_mb), scheduled_profile_(scheduled_profile) {
  if (capacity_mb < 0 || horizon_slots < 1)
    throw std::invalid_argument("node cache: bad capacity or horizon");
  occupied_mb_.assign(horizon_slots, 0);
}

const CacheEntry* NodeCache::find(ContentId content) const {
  auto it = entries_.find(content);
  return it == entries_.end() ? nullptr : &it->second;
}

SizeMb NodeCache::occupied(Slot slot) const {
  if (slot < 0 || slot >= horizon()) return 0;
  if (!scheduled_profile_ && slot >= committed_) return flat_total_;
  return occupied_mb_[slot];
}

void NodeCache::commit_slot(Slot slot) {
  if (scheduled_profile_ || slot < committed_ || slot >= horizon()) return;
  for (Slot t = committed_; t <= slot; ++t) occupied_mb_[t] = flat_total_;
  committed_ = slot + 1;
}

double NodeCache::relative_load(Slot slot) const {
  if (capacity_mb_ == 0) return 0.0;
  return static_cast<double>(occupied(slot)) / static_cast<double>(capacity_mb_);
}

double NodeCache::cost(const CostParams& params, Slot slot) const {
  const double load = relative_load(slot);
  if (load == 0.0) return 0.0;
  return static_cast<double>(capacity_mb_) * (std::exp2(load * params.log2_mu) - 1.0);
}

double NodeCache::aggregate_admission_cost(const CostParams& params, SizeMb candidate_mb,
                                           Slot t0, Slot duration,
                                           double stop_above) const {
  if (capacity_mb_ == 0) return std::numeric_limits<double>::infinity();
  const Slot last = std::min<Slot>(t0 + duration, horizon() - 1);
  const double size_fraction = static_cast<double>(candidate_mb) / capacity_mb_;
  const double scale = params.log2_mu / static_cast<double>(capacity_mb_);
  if (!scheduled_profile_) {
    // Flat forward profile: every slot prices identically.
    if (flat_total_ == 0) return 0.0;
    return static_cast<double>(last - t0 + 1) * size_fraction * capacity_mb_ *
           (std::exp2(scale * flat_total_) - 1.0);
  }
  double total = 0.0;
  for (Slot t = t0; t <= last; ++t) {
    const SizeMb occ = occupied_mb_[t];
    if (occ == 0) continue;
    total += size_fraction * capacity_mb_ * (std::exp2(scale * occ) - 1.0);
    if (total > stop_above) return total;
  }
  return total;
}

bool NodeCache::fits(SizeMb size_mb, Slot from, Slot to) const {
  if (size_mb > capacity_mb_) return false;
  if (from >= horizon()) return true;
  if (!scheduled_profile_) return flat_total_ + size_mb <= capacity_mb_;
  // With no scheduled flush ahead the profile is flat from `from` onward.
  if (finite_expiry_entries_ == 0)
    return occupied_mb_[from] + size_mb <= capacity_mb_;
  const Slot last = std::min<Slot>(to, horizon() - 1);
  for (Slot t = from; t <= last; ++t)
    if (occupied_mb_[t] + size_mb > capacity_mb_) return false;
  return true;
}

void NodeCache::admit(const CacheEntry& entry) {
  if (entry.size_mb <= 0) throw std::invalid_argument("admit: non-positive size");
  if (entry.expiry < entry.admitted_at) throw std::invalid_argument("admit: expiry < admission");
  if (entries_.count(entry.content)) throw std::logic_error("admit: content already cached");
  if (!scheduled_profile_) {
    if (entry.expiry != kNeverExpires)
      throw std::logic_error("admit: scheduled flush in a flat-profile cache");
    if (flat_total_ + entry.size_mb > capacity_mb_)
      throw std::logic_error("admit: per-slot capacity violated");
    flat_total_ += entry.size_mb;
    entries_.emplace(entry.content, entry);
    return;
  }
  const Slot last = std::min<Slot>(entry.expiry, horizon() - 1);
  for (Slot t = entry.admitted_at; t <= last; ++t) {
    if (occupied_mb_[t] + entry.size_mb > capacity_mb_)
      throw std::logic_error("admit: per-slot capacity violated");
  }
  for (Slot t = entry.admitted_at; t <= last; ++t) occupied_mb_[t] += entry.size_mb;
  if (entry.expiry != kNeverExpires) {
    by_expiry_[entry.expiry].push_back(entry.content);
    ++finite_expiry_entries_;
  }
  entries_.emplace(entry.content, entry);
}

std::vector<CacheEntry> NodeCache::flush_expired(Slot slot) {
  std::vector<CacheEntry> flushed;
  while (!by_expiry_.empty() && by_expiry_.begin()->first < slot) {
    for (ContentId c : by_expiry_.begin()->second) {
      auto it = entries_.find(c);
      if (it == entries_.end()) continue;  // evicted earlier
      if (it->second.expiry != by_expiry_.begin()->first) continue;
      flushed.push_back(it->second);
      entries_.erase(it);
      --finite_expiry_entries_;
    }
    by_expiry_.erase(by_expiry_.begin());
  }
  return flushed;
}

CacheEntry NodeCache::evict(ContentId content, Slot from_slot) {
  auto it = entries_.find(content);
  if (it == entries_.end()) throw std::logic_error("evict: content not cached");
  CacheEntry entry = it->second;
  if (!scheduled_profile_) {
    flat_total_ -= entry.size_mb;
    entries_.erase(it);
    return entry;
  }
  const Slot last = std::min<Slot>(entry.expiry, horizon() - 1);
  for (Slot t = std::max<Slot>(from_slot, entry.admitted_at); t <= last; ++t)
    occupied_mb_[t] -= entry.size_mb;
  entries_.erase(it);
  if (entry.expiry != kNeverExpires) --finite_expiry_entries_;
  return entry;
}

void NodeCache::touch(ContentId content, Slot slot) {
  auto it = entries_.find(content);
  if (it != entries_.end()) it->second.last_touch = slot;
}

std::int64_t NodeCache::live_count(Slot slot) const {
  std::int64_t c = 0;
  for (const auto& [id, e] : entries_)
    if (e.admitted_at <= slot && slot <= e.expiry) ++c;
  return c;
}

AssumptionReport validate_assumptions(const Topology& topo, const RoutingTable& routes,
                                      const Catalog& catalog,
                                      const ExpectationTable& expectations) {
  AssumptionReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = 0.0;
  rep.min_capacity_mb = std::numeric_limits<SizeMb>::max();
  rep.max_content_mb = 0;

  const int n_caching = std::max(1, topo.caching_node_count());
  for (NodeId i = 0; i < topo.n; ++i)
    if (topo.capacity_mb[i] > 0)
      rep.min_capacity_mb = std::min(rep.min_capacity_mb, topo.capacity_mb[i]);
  if (rep.min_capacity_mb == std::numeric_limits<SizeMb>::max()) rep.min_capacity_mb = 0;

  for (ContentId j = 0; j < catalog.contents.size(); ++j) {
    const Content& c = catalog.contents[j];
    rep.max_content_mb = std::max(rep.max_content_mb, c.size_mb);
    const double window = std::max<Slot>(1, c.window_end - c.window_start);
    for (NodeId i = 0; i < topo.n; ++i) {
      if (i == c.source || topo.capacity_mb[i] == 0) continue;
      const double dist = routes.distance(i, c.source);
      const double ratio = expectations.initial(i, j) * dist /
                           (n_caching * static_cast<double>(c.size_mb) * window);
      if (ratio < rep.min_ratio) {
        rep.min_ratio = ratio;
        rep.worst_lower_node = i;
        rep.worst_lower_content = j;
      }
      rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
  }
  if (!std::isfinite(rep.min_ratio)) rep.min_ratio = 0.0;

  rep.caching_nodes = n_caching;
  rep.max_duration = catalog.max_effective_duration();
  rep.density_bound = std::max(1.0, rep.max_ratio);
  rep.mu = 2.0 * (static_cast<double>(n_caching) * rep.max_duration * rep.density_bound + 1.0);
  rep.log2_mu = std::log2(rep.mu);
  rep.mu_in_range = rep.log2_mu <= 900.0;
  rep.density_lower_ok = rep.min_ratio >= 1.0 - 1e-12;
  rep.size_bound_ok = rep.min_capacity_mb > 0 &&
              static_cast<double>(rep.max_content_mb) <=
                  static_cast<double>(rep.min_capacity_mb) / rep.log2_mu;
  return rep;
}

CostParams cost_params_from_report(const AssumptionReport& report) {
  return make_cost_params(report.caching_nodes, report.max_duration, report.density_bound);
}

}  // namespace crcsim
