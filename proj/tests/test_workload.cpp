#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "crcsim/rng.hpp"
#include "crcsim/workload.hpp"

using namespace crcsim;

TEST_CASE("catalog honors ranges, windows and normalization") {
  const auto topo = build_random_topology(10, 1, {1000, 2000}, {5, 20});
  const auto cat = generate_catalog(topo, 500, {100, 150}, 150, 1000, 0.8, 3);
  REQUIRE(cat.contents.size() == 500);
  double total = 0.0;
  for (const auto& c : cat.contents) {
    CHECK(c.size_mb >= 100);
    CHECK(c.size_mb <= 150);
    CHECK(c.duration >= 1);
    CHECK(c.duration <= 150);
    CHECK(c.window_start >= 0);
    CHECK(c.window_start <= c.window_end);
    CHECK(c.window_end <= cat.last_slot());
    CHECK(c.source < topo.n);
    total += c.popularity;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("catalog edge cases") {
  const auto topo = build_random_topology(5, 1, {1000, 2000}, {5, 20});
  const auto single = generate_catalog(topo, 1, {100, 100}, 10, 100, 0.8, 3);
  CHECK(single.contents[0].popularity == doctest::Approx(1.0));

  const auto uniform = generate_catalog(topo, 40, {100, 100}, 10, 100, 0.0, 3);
  for (const auto& c : uniform.contents)
    CHECK(c.popularity == doctest::Approx(1.0 / 40));

  CHECK_THROWS_AS(generate_catalog(topo, 0, {100, 150}, 10, 100, 0.8, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_catalog(topo, 5, {150, 100}, 10, 100, 0.8, 3),
                  std::invalid_argument);
}

TEST_CASE("expected request rate form and linearity") {
  auto topo = make_topology(TopologyKind::kExplicit, 4, {{0, 1}, {1, 2}, {2, 3}},
                            {100, 100, 100, 100}, {0, 3, 4, 2});
  Catalog cat;
  cat.horizon_slots = 10;
  cat.contents.push_back({0, 50, 5, 1.0, 0, 5});
  DemandModel demand;
  demand.rate_scale = 1.0;
  CHECK(expected_request_rate(topo, cat, demand, 2, 0) == doctest::Approx(4.0));
  CHECK(expected_request_rate(topo, cat, demand, 0, 0) == doctest::Approx(0.0));
  DemandModel doubled;
  doubled.rate_scale = 2.0;
  for (NodeId i = 0; i < topo.n; ++i)
    CHECK(expected_request_rate(topo, cat, doubled, i, 0) ==
          doctest::Approx(2.0 * expected_request_rate(topo, cat, demand, i, 0)));
}

TEST_CASE("requests stay inside windows and vanish at rate zero") {
  auto topo = make_topology(TopologyKind::kExplicit, 3, {{0, 1}, {1, 2}}, {10, 10, 10},
                            {0, 4, 0});
  Catalog cat;
  cat.horizon_slots = 20;
  cat.contents.push_back({0, 5, 1, 1.0, 5, 5});  // single-slot window
  DemandModel demand;
  demand.rate_scale = 3.0;
  const auto trace = generate_requests(topo, cat, demand, 11);
  for (const auto& e : trace) {
    CHECK(e.slot == 5);
    CHECK(e.node == 1);  // only node with a subnetwork
    CHECK(e.count > 0);
  }
}

TEST_CASE("poisson empirical mean tracks the configured rate") {
  Rng rng(12345);
  const double mean = 3.7;
  const int draws = 10000;
  std::int64_t total = 0;
  for (int i = 0; i < draws; ++i) total += rng.poisson(mean);
  const double empirical = static_cast<double>(total) / draws;
  CHECK(std::abs(empirical - mean) / mean < 0.05);

  Rng rng2(99);
  std::int64_t big = 0;
  for (int i = 0; i < 2000; ++i) big += rng2.poisson(800.0);  // gaussian regime
  CHECK(std::abs(big / 2000.0 - 800.0) / 800.0 < 0.05);
}

TEST_CASE("trace generation is deterministic and round-trips as text") {
  const auto topo = build_random_topology(8, 2, {1000, 2000}, {5, 20});
  const auto cat = generate_catalog(topo, 50, {100, 150}, 20, 100, 0.8, 5);
  DemandModel demand;
  demand.rate_scale = 0.5;
  const auto a = generate_requests(topo, cat, demand, 17);
  const auto b = generate_requests(topo, cat, demand, 17);
  REQUIRE(a.size() == b.size());
  CHECK(export_trace(a) == export_trace(b));

  const auto back = import_trace(export_trace(a));
  CHECK(export_trace(back) == export_trace(a));
  CHECK_THROWS_AS(import_trace("bogus\n"), std::invalid_argument);

  bool sorted = true;
  for (std::size_t i = 1; i < a.size(); ++i)
    if (a[i].slot < a[i - 1].slot) sorted = false;
  CHECK(sorted);
  for (const auto& e : a) {
    CHECK(e.slot >= cat.contents[e.content].window_start);
    CHECK(e.slot <= cat.contents[e.content].window_end);
  }
}
