#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crcsim/policies.hpp"

namespace crcsim {

// Everything a run consumes; immutable while runs execute, so replications
// may share one instance across threads. Either `trace` carries materialized
// events, or `dense_trace` tells the engine to stream the same per-cell
// Poisson draws slot by slot (needed when the request grid is too dense to
// hold in memory).
struct Instance {
  Topology topo;
  RoutingTable routes;
  Catalog catalog;
  DemandModel demand;
  std::vector<RequestEvent> trace;
  bool dense_trace = false;
  std::uint64_t trace_seed = 0;
};

struct RunSettings {
  PolicyKind policy = PolicyKind::kCrc;
  std::uint64_t seed = 0;
  double expectation_noise = 0.0;
  bool strict = false;             // per-slot invariant scans + abort on soft failures
  bool auto_rescale_demand = false;  // lift rate_scale until the A1 lower bound holds
  bool track_per_content = false;
};

struct RunMetrics {
  std::int64_t realized_savings = 0;
  std::int64_t total_cost_hops = 0;
  std::int64_t no_cache_cost_hops = 0;  // realized + cost, by conservation
  double expected_savings = 0.0;
  std::int64_t requests = 0;
  std::int64_t events = 0;
  std::int64_t local_hits = 0;
  std::int64_t admissions = 0;
  std::int64_t evictions = 0;
  std::int64_t safety_net_rejects = 0;
  std::int64_t capacity_violations = 0;
  double audit_lhs = 0.0;
  double audit_rhs = 0.0;
  bool audit_ok = true;
  AssumptionReport assumptions;
  std::vector<std::int64_t> per_slot_realized;
  std::vector<std::int64_t> per_slot_cost;
  std::vector<double> per_slot_expected;
  std::vector<std::int64_t> realized_by_content;  // filled when track_per_content
};

RunMetrics run(const Instance& instance, const RunSettings& settings);

// Savings-vs-cost audit: twice log2(mu) times the accumulated expected
// savings must cover the cost of the final load profile, summed over nodes
// and slots. Guaranteed when the demand-density lower bound holds.
bool check_savings_cost_audit(const RunMetrics& metrics, const std::vector<NodeCache>& caches,
                  const CostParams& params, double* lhs_out = nullptr,
                  double* rhs_out = nullptr);

struct MetricStats {
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct Summary {
  int runs = 0;
  MetricStats realized_savings;
  MetricStats total_cost_hops;
  MetricStats expected_savings;
  MetricStats no_cache_cost_hops;
};

Summary aggregate(const std::vector<RunMetrics>& replications);

// Right-continuous empirical CDF: (value, fraction of samples <= value),
// duplicates collapsed into one step.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values);
double cdf_at(const std::vector<std::pair<double, double>>& cdf, double x);

}  // namespace crcsim
