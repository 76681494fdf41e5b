#include "crcsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crcsim {

namespace {

void account_span(std::vector<double>& delta, double amount, Slot from, Slot to_inclusive,
                  Slot horizon) {
  const Slot last = std::min<Slot>(to_inclusive, horizon - 1);
  if (from > last) return;
  delta[from] += amount;
  delta[last + 1] -= amount;
}

}  // namespace

RunMetrics run(const Instance& instance, const RunSettings& settings) {
  const Topology& topo = instance.topo;
  const Catalog& catalog = instance.catalog;
  const Slot horizon = catalog.horizon_slots;

  DemandModel demand = instance.demand;
  ExpectationTable expectations(topo, instance.routes, catalog, demand);
  AssumptionReport report =
      validate_assumptions(topo, instance.routes, catalog, expectations);

  if (settings.auto_rescale_demand && !report.density_lower_ok && report.min_ratio > 0.0) {
    // The ratio is linear in the demand scale, so one correction is exact.
    const double factor = 1.0 / report.min_ratio;
    if (demand.matrix.empty()) {
      demand.rate_scale *= factor;
    } else {
      for (double& v : demand.matrix) v *= factor;
    }
    expectations = ExpectationTable(topo, instance.routes, catalog, demand);
    report = validate_assumptions(topo, instance.routes, catalog, expectations);
  }
  if (settings.expectation_noise > 0.0)
    expectations.apply_noise(settings.expectation_noise, settings.seed ^ 0x6e6f697365ULL);

  if (is_crc_family(settings.policy) && settings.strict && !report.hard_ok())
    throw std::runtime_error("run: cost-function preconditions failed (size bound or mu range)");

  SimulationState st(topo, instance.routes, catalog, demand, settings.policy,
                     cost_params_from_report(report), std::move(expectations),
                     settings.seed);

  RunMetrics m;
  m.assumptions = report;
  m.per_slot_realized.assign(horizon, 0);
  m.per_slot_cost.assign(horizon, 0);
  if (settings.track_per_content) m.realized_by_content.assign(catalog.contents.size(), 0);
  std::vector<double> expected_delta(horizon + 1, 0.0);

  auto handle_event = [&](const RequestEvent& e) {
    if (e.slot < 0 || e.slot >= horizon)
      throw std::invalid_argument("run: event outside horizon");
    const Content& c = catalog.contents[e.content];
    if (e.slot < c.window_start || e.slot > c.window_end)
      throw std::invalid_argument("run: event outside its content window");

    const ServeResult sr = en_route_serve(st, e.node, e.content, e.slot, e.count);
    const Hops to_source = instance.routes.distance(e.node, c.source);
    const std::int64_t saved = e.count * (to_source - sr.hops_traveled);
    const std::int64_t paid = e.count * sr.hops_traveled;
    if (saved < 0) throw std::logic_error("run: serving farther than the source");

    m.realized_savings += saved;
    m.total_cost_hops += paid;
    m.no_cache_cost_hops += e.count * to_source;
    m.requests += e.count;
    ++m.events;
    if (sr.local_hit) ++m.local_hits;
    m.per_slot_realized[e.slot] += saved;
    m.per_slot_cost[e.slot] += paid;
    if (settings.track_per_content) m.realized_by_content[e.content] += saved;

    for (const Admission& a : sr.admissions)
      account_span(expected_delta, a.entry.frozen_demand * a.entry.frozen_distance,
                   a.entry.admitted_at, a.entry.expiry, horizon);
    for (const Eviction& ev : sr.evictions)
      account_span(expected_delta, -ev.entry.frozen_demand * ev.entry.frozen_distance, e.slot,
                   ev.entry.expiry, horizon);
  };

  // Streaming mode iterates the live grid in the same (slot, content, node)
  // order a materialized trace would be sorted in. Per-cell means repeat
  // across slots, so the Poisson limits are computed once per (content, node).
  std::vector<std::vector<ContentId>> live_by_slot;
  std::vector<double> cell_mean, cell_limit;
  if (instance.dense_trace) {
    live_by_slot.assign(horizon, {});
    for (ContentId j = 0; j < catalog.contents.size(); ++j)
      for (Slot t = catalog.contents[j].window_start; t <= catalog.contents[j].window_end;
           ++t)
        live_by_slot[t].push_back(j);
    const std::size_t cells =
        static_cast<std::size_t>(catalog.contents.size()) * topo.n;
    cell_mean.resize(cells);
    cell_limit.resize(cells);
    for (ContentId j = 0; j < catalog.contents.size(); ++j) {
      for (NodeId i = 0; i < topo.n; ++i) {
        const double mean = demand.rate(topo, catalog, i, j);
        cell_mean[static_cast<std::size_t>(j) * topo.n + i] = mean;
        cell_limit[static_cast<std::size_t>(j) * topo.n + i] =
            mean > 0.0 && mean <= 64.0 ? std::exp(-mean) : 1.0;
      }
    }
  }

  std::size_t next_event = 0;
  for (Slot slot = 0; slot < horizon; ++slot) {
    for (NodeId i = 0; i < topo.n; ++i) {
      for (const CacheEntry& e : st.caches[i].flush_expired(slot)) st.on_flushed(i, e);
    }
    st.expectations.restore_on_expiry(slot);

    if (instance.dense_trace) {
      for (ContentId j : live_by_slot[slot]) {
        const std::size_t base = static_cast<std::size_t>(j) * topo.n;
        for (NodeId i = 0; i < topo.n; ++i) {
          const std::int64_t count = draw_request_count(
              instance.trace_seed, j, i, slot, cell_mean[base + i], cell_limit[base + i]);
          if (count > 0) handle_event({slot, i, j, count});
        }
      }
    } else {
      while (next_event < instance.trace.size() &&
             instance.trace[next_event].slot == slot)
        handle_event(instance.trace[next_event++]);
    }

    for (NodeId i = 0; i < topo.n; ++i) st.caches[i].commit_slot(slot);

    if (settings.strict) {
      for (NodeId i = 0; i < topo.n; ++i)
        if (st.caches[i].occupied(slot) > topo.capacity_mb[i])
          throw std::logic_error("run: per-slot capacity violated");
      if (is_crc_family(settings.policy) && !st.expectations.conservation_ok())
        throw std::logic_error("run: expectation mass not conserved");
    }
  }

  if (!instance.dense_trace && next_event != instance.trace.size())
    throw std::invalid_argument("run: trace not sorted by slot or outside horizon");

  m.admissions = st.admissions_total;
  m.evictions = st.evictions_total;
  m.safety_net_rejects = st.safety_net_rejects;

  // Conservation is definitional; a mismatch means the serve path counted
  // a request twice or not at all.
  if (m.realized_savings + m.total_cost_hops != m.no_cache_cost_hops)
    throw std::logic_error("run: savings/cost conservation violated");

  m.per_slot_expected.assign(horizon, 0.0);
  double acc = 0.0;
  for (Slot t = 0; t < horizon; ++t) {
    acc += expected_delta[t];
    m.per_slot_expected[t] = acc;
    m.expected_savings += acc;
  }

  for (NodeId i = 0; i < topo.n; ++i)
    for (Slot t = 0; t < horizon; ++t)
      if (st.caches[i].occupied(t) > topo.capacity_mb[i]) ++m.capacity_violations;

  m.audit_ok = check_savings_cost_audit(m, st.caches, st.params, &m.audit_lhs, &m.audit_rhs);
  return m;
}

bool check_savings_cost_audit(const RunMetrics& metrics, const std::vector<NodeCache>& caches,
                  const CostParams& params, double* lhs_out, double* rhs_out) {
  const double lhs = 2.0 * params.log2_mu * metrics.expected_savings;
  double rhs = 0.0;
  for (const NodeCache& cache : caches) {
    if (cache.capacity() == 0) continue;
    for (Slot t = 0; t < cache.horizon(); ++t) rhs += cache.cost(params, t);
  }
  if (lhs_out) *lhs_out = lhs;
  if (rhs_out) *rhs_out = rhs;
  return lhs >= rhs - 1e-6 * std::max(1.0, rhs);
}

Summary aggregate(const std::vector<RunMetrics>& replications) {
  if (replications.empty()) throw std::invalid_argument("aggregate: no replications");
  Summary s;
  s.runs = static_cast<int>(replications.size());
  auto stats = [&](auto getter) {
    MetricStats st;
    double sum = 0.0;
    for (const auto& r : replications) sum += getter(r);
    st.mean = sum / replications.size();
    if (replications.size() > 1) {
      double ss = 0.0;
      for (const auto& r : replications) {
        const double d = getter(r) - st.mean;
        ss += d * d;
      }
      st.stderr_ = std::sqrt(ss / (replications.size() - 1)) /
                   std::sqrt(static_cast<double>(replications.size()));
    }
    return st;
  };
  s.realized_savings = stats([](const RunMetrics& r) { return double(r.realized_savings); });
  s.total_cost_hops = stats([](const RunMetrics& r) { return double(r.total_cost_hops); });
  s.expected_savings = stats([](const RunMetrics& r) { return r.expected_savings; });
  s.no_cache_cost_hops = stats([](const RunMetrics& r) { return double(r.no_cache_cost_hops); });
  return s;
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("empirical_cdf: empty input");
  std::sort(values.begin(), values.end());
  std::vector<std::pair<double, double>> cdf;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double frac = static_cast<double>(i + 1) / n;
    if (!cdf.empty() && cdf.back().first == values[i])
      cdf.back().second = frac;
    else
      cdf.emplace_back(values[i], frac);
  }
  return cdf;
}

double cdf_at(const std::vector<std::pair<double, double>>& cdf, double x) {
  double frac = 0.0;
  for (const auto& [v, f] : cdf) {
    if (v <= x)
      frac = f;
    else
      break;
  }
  return frac;
}

}  // namespace crcsim
