#include <doctest.h>

#include <stdexcept>

#include "crcsim/oracle.hpp"

using namespace crcsim;

namespace {

// The two-content chain scenario: source 0, routers 1..3, router 2 cannot
// cache, routers 1 and 3 hold exactly one copy each. Content 0 is requested
// once per event at the far router, content 1 ten times per event; each is
// requested twice there and once later at router 2.
Instance motivating_instance(bool hot_first) {
  Instance inst;
  inst.topo = make_topology(TopologyKind::kExplicit, 4, {{0, 1}, {1, 2}, {2, 3}},
                            {0, 100, 0, 100}, {0, 0, 1, 11});
  inst.routes = build_routing(inst.topo);
  inst.catalog.horizon_slots = 8;
  inst.catalog.contents.push_back({0, 100, 6, 1.0 / 11, 1, 6});  // cold
  inst.catalog.contents.push_back({0, 100, 6, 10.0 / 11, 1, 6});  // hot
  inst.demand = make_matrix_demand(4, 2, {0, 0, 1, 1, 0, 0, 1, 10});
  const ContentId a = hot_first ? 1 : 0;
  const ContentId b = hot_first ? 0 : 1;
  const std::int64_t ca = hot_first ? 10 : 1;
  const std::int64_t cb = hot_first ? 1 : 10;
  inst.trace = {{1, 3, a, ca}, {2, 3, b, cb}, {3, 3, a, ca},
                {4, 3, b, cb}, {5, 2, 0, 1},  {6, 2, 1, 1}};
  return inst;
}

// The generic online behavior the scenario narrates: the requester caches
// the first arrival it has room for; the next node up with room takes the
// second.
PlacementSchedule narrative_schedule(bool hot_first) {
  const ContentId first = hot_first ? 1 : 0;
  const ContentId second = hot_first ? 0 : 1;
  return {{3, first, 1}, {1, second, 2}};
}

}  // namespace

TEST_CASE("scoring the narrative placements reproduces the worked savings") {
  SUBCASE("cold content first") {
    const Instance inst = motivating_instance(false);
    const auto s = score_placement(inst, narrative_schedule(false), ServingModel::kEnRoute);
    REQUIRE(s.feasible);
    CHECK(s.savings == 14);  // 13 at the requester stage + 1 later
    const auto closest =
        score_placement(inst, narrative_schedule(false), ServingModel::kNearestReplica);
    REQUIRE(closest.feasible);
    CHECK(closest.savings == 15);
  }
  SUBCASE("hot content first") {
    const Instance inst = motivating_instance(true);
    const auto s = score_placement(inst, narrative_schedule(true), ServingModel::kEnRoute);
    REQUIRE(s.feasible);
    CHECK(s.savings == 32);  // 31 at the requester stage + 1 later
    const auto closest =
        score_placement(inst, narrative_schedule(true), ServingModel::kNearestReplica);
    REQUIRE(closest.feasible);
    CHECK(closest.savings == 33);
  }
}

TEST_CASE("offline optimum of the worked example") {
  for (bool hot_first : {false, true}) {
    const Instance inst = motivating_instance(hot_first);
    const auto best = optimal_placement(inst, 1 << 20, ServingModel::kEnRoute);
    CHECK(best.savings == 32);
    const auto closest = optimal_placement(inst, 1 << 20, ServingModel::kNearestReplica);
    CHECK(closest.savings == 33);
  }
}

TEST_CASE("placement validity: unreachable or oversubscribed placements fail") {
  const Instance inst = motivating_instance(false);
  // Content 0 never transits node 1 at slot 2 (that slot's event is content 1).
  CHECK_FALSE(score_placement(inst, {{1, 0, 2}}, ServingModel::kEnRoute).feasible);
  // Node 2 cannot cache.
  CHECK_FALSE(score_placement(inst, {{2, 0, 1}}, ServingModel::kEnRoute).feasible);
  // Two copies at a one-copy node.
  CHECK_FALSE(
      score_placement(inst, {{3, 0, 1}, {3, 1, 2}}, ServingModel::kEnRoute).feasible);
  // The source never caches its own content.
  CHECK_FALSE(score_placement(inst, {{0, 0, 1}}, ServingModel::kEnRoute).feasible);
}

TEST_CASE("no caching capacity means zero optimal savings") {
  Instance inst = motivating_instance(false);
  inst.topo.capacity_mb = {0, 0, 0, 0};
  const auto best = optimal_placement(inst, 1 << 20, ServingModel::kEnRoute);
  CHECK(best.savings == 0);
  CHECK(best.best.empty());
}

TEST_CASE("budget guard rejects oversized decision spaces") {
  const Instance inst = motivating_instance(false);
  CHECK_THROWS_AS(optimal_placement(inst, 16, ServingModel::kEnRoute),
                  std::invalid_argument);
}

TEST_CASE("flat sweep and recursive search agree") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    const Instance inst = make_star_instance(seed, 2, 3, 6);
    const auto flat = optimal_placement(inst, 1 << 20, ServingModel::kEnRoute);
    const auto rec = optimal_placement_recursive(inst, 1 << 20, ServingModel::kEnRoute);
    CHECK(flat.savings == rec.savings);
  }
  const Instance inst = motivating_instance(true);
  CHECK(optimal_placement(inst, 1 << 20, ServingModel::kEnRoute).savings ==
        optimal_placement_recursive(inst, 1 << 20, ServingModel::kEnRoute).savings);
}

TEST_CASE("competitive ratio on a trivially cacheable instance is 1") {
  // One content, ample capacity, repeat requests from one leaf: the online
  // scheme admits on first sight, exactly like the optimum.
  Instance inst;
  inst.topo = make_topology(TopologyKind::kExplicit, 3, {{0, 1}, {1, 2}}, {0, 1000, 0},
                            {0, 0, 3});
  inst.routes = build_routing(inst.topo);
  inst.catalog.horizon_slots = 8;
  inst.catalog.contents.push_back({0, 100, 6, 1.0, 0, 6});
  inst.demand = make_matrix_demand(3, 1, {0, 0, 2});
  inst.trace = {{0, 2, 0, 2}, {1, 2, 0, 2}, {2, 2, 0, 2}};
  const RatioReport rep = competitive_ratio(inst, PolicyKind::kCrc);
  CHECK(rep.online_savings == doctest::Approx(rep.offline_savings));
  CHECK(rep.ratio == doctest::Approx(1.0));
  CHECK(rep.ratio <= rep.bound);
}

TEST_CASE("offline dominates the online policy on random stars") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const Instance inst = make_star_instance(seed, 3, 4, 7);
    const RatioReport rep = competitive_ratio(inst, PolicyKind::kCrc);
    CHECK(rep.offline_savings >= rep.online_savings - 1e-9);
    CHECK(rep.ratio <= rep.bound);
  }
}

TEST_CASE("lower-bound construction shape") {
  const auto lb4 = make_lower_bound_instance(4);
  CHECK(lb4.instance.topo.n == 6);
  CHECK(lb4.phases == 3);
  CHECK(lb4.instance.catalog.contents.size() == 12);
  // Requester counts double per phase.
  std::vector<std::int64_t> counts(3, 0);
  for (const auto& e : lb4.instance.trace)
    if (e.slot == 1) counts[lb4.phase_of_content[e.content]] = e.count;
  CHECK(counts[0] == 1);
  CHECK(counts[1] == 2);
  CHECK(counts[2] == 4);

  const auto lb8 = make_lower_bound_instance(8, 0.25);
  CHECK(lb8.phases == 4);
  CHECK(lb8.instance.catalog.contents.size() == 16);

  const auto lb1 = make_lower_bound_instance(1);
  CHECK(lb1.instance.topo.n == 3);
  CHECK(lb1.phases == 1);

  // Per-phase volume exactly fills the caching node.
  const SizeMb cap = lb4.instance.topo.capacity_mb[1];
  std::vector<SizeMb> volume(3, 0);
  for (ContentId j = 0; j < lb4.instance.catalog.contents.size(); ++j)
    volume[lb4.phase_of_content[j]] += lb4.instance.catalog.contents[j].size_mb;
  for (SizeMb v : volume) CHECK(v == cap);

  CHECK_THROWS_AS(make_lower_bound_instance(3), std::invalid_argument);
  CHECK_THROWS_AS(make_lower_bound_instance(4, 0.3), std::invalid_argument);
}

TEST_CASE("lower-bound experiment bounds hold for the online policy") {
  for (NodeId n : {4u, 8u, 16u}) {
    const auto rep = lower_bound_experiment_run(n, PolicyKind::kCrc);
    CHECK(rep.sum_ratio <= 2.0 + 1e-9);
    CHECK(rep.min_ratio <= rep.bound + 1e-9);
    CHECK(rep.g_cumulative.back() > 0.0);  // the policy does cache something
  }
}
