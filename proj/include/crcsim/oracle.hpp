#pragma once

#include <cstdint>
#include <vector>

#include "crcsim/engine.hpp"

namespace crcsim {

enum class ServingModel { kEnRoute, kNearestReplica };

// One offline admission: cache `content` at `node` starting at `slot`. Valid
// only if some request at that slot actually carries the content through the
// node (the walk must reach it) and every covered slot has room.
struct PlacementAction {
  NodeId node = 0;
  ContentId content = 0;
  Slot slot = 0;
};
using PlacementSchedule = std::vector<PlacementAction>;

struct ScoreResult {
  bool feasible = false;
  std::int64_t savings = 0;
};

// Replays the trace with the schedule materializing along the way and counts
// realized hop savings under the chosen serving model.
ScoreResult score_placement(const Instance& instance, const PlacementSchedule& schedule,
                            ServingModel model);

struct OracleResult {
  PlacementSchedule best;
  std::int64_t savings = 0;
  std::uint64_t vectors_examined = 0;
};

// Exhaustive search over en-route-realizable placements. Throws when the
// decision space exceeds `budget` vectors.
OracleResult optimal_placement(const Instance& instance, std::uint64_t budget,
                               ServingModel model = ServingModel::kEnRoute);

// Structurally independent recursive enumerator with pruning; used to
// cross-check the flat sweep on small instances.
OracleResult optimal_placement_recursive(const Instance& instance, std::uint64_t budget,
                                         ServingModel model = ServingModel::kEnRoute);

struct RatioReport {
  double offline_savings = 0.0;
  double online_savings = 0.0;
  double ratio = 0.0;  // offline / online
  double bound = 0.0;  // 2 * log2(2 * mu)
};

RatioReport competitive_ratio(const Instance& instance, PolicyKind policy,
                              std::uint64_t budget = 1ull << 20,
                              ServingModel model = ServingModel::kEnRoute,
                              std::uint64_t seed = 0);

// Adversarial phased star: one caching node, n requester leaves, log2(n)+1
// phases of 1/alpha identical contents sized alpha * capacity with a two-slot
// effective window; phase i is destined for the first 2^i leaves. Phase-i
// savings are normalized so a fully cached phase contributes 2^i.
struct LowerBoundInstance {
  Instance instance;
  double alpha = 0.25;
  int phases = 1;
  std::vector<int> phase_of_content;
};

LowerBoundInstance make_lower_bound_instance(NodeId n_leaves, double alpha = 0.25);

struct LowerBoundReport {
  NodeId n = 1;
  std::vector<double> g_cumulative;  // G(k) over phases
  double sum_ratio = 0.0;            // sum_k G(k)/2^k
  double min_ratio = 0.0;            // min_k G(k)/2^k
  double bound = 0.0;                // 2 / log2(n)
};

LowerBoundReport lower_bound_experiment_run(NodeId n_leaves, PolicyKind policy,
                                            double alpha = 0.25);
std::vector<LowerBoundReport> lower_bound_experiment(const std::vector<NodeId>& n_values,
                                                     PolicyKind policy, double alpha = 0.25);

// Random single-caching-node star instance for competitive-ratio sweeps.
Instance make_star_instance(std::uint64_t seed, int leaves, int contents, Slot horizon);

}  // namespace crcsim
