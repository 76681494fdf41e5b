#include <doctest.h>

#include <stdexcept>

#include "crcsim/experiment.hpp"

using namespace crcsim;

TEST_CASE("empty config yields the documented defaults") {
  const ExperimentSpec s = parse_config("");
  CHECK(s.horizon == 1000);
  CHECK(s.capacity_mb.first == 750000);
  CHECK(s.capacity_mb.second == 1000000);
  CHECK(s.size_mb.first == 100);
  CHECK(s.size_mb.second == 150);
  CHECK(s.subnet.first == 10);
  CHECK(s.subnet.second == 90);
  CHECK(s.zipf == doctest::Approx(0.8));
}

TEST_CASE("preset fig7a matches its sweep definition") {
  const ExperimentSpec s = preset("fig7a");
  CHECK(s.node_counts == std::vector<int>{30, 50, 100});
  CHECK(s.max_durations == std::vector<Slot>{150});
  CHECK(s.content_counts == std::vector<int>{10000});
  CHECK(s.replications == 10);
  CHECK(s.policies.size() == 5);
  CHECK_THROWS_AS(preset("fig99"), std::invalid_argument);
}

TEST_CASE("config errors carry the offending field") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"policies": ["lfu"]})"),
                       "policies: unknown policy 'lfu'", std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"topology": {"nodes": []}})"),
                       "topology.nodes: empty sweep", std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"topology": {"capacity_mb": [5, 1]}})"),
                       "topology.capacity_mb: lo > hi", std::invalid_argument);
  CHECK_THROWS_AS(parse_config("{nonsense"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_file("/nonexistent/x.json"), std::invalid_argument);
}

TEST_CASE("specs round-trip through emit/parse") {
  for (const std::string& name : preset_names()) {
    const ExperimentSpec spec = preset(name);
    const ExperimentSpec back = parse_config(emit_config(spec));
    CHECK(back == spec);
  }
}

TEST_CASE("experiment grid runs deterministically and reports every cell") {
  ExperimentSpec s;
  s.name = "unit";
  s.node_counts = {6};
  s.content_counts = {30};
  s.max_durations = {10};
  s.capacity_mb = {1500, 2500};
  s.subnet = {2, 6};
  s.horizon = 40;
  s.policies = {PolicyKind::kCrc, PolicyKind::kAllCache};
  s.replications = 2;
  s.seed_base = 9;
  s.parallelism = 2;

  const ExperimentResult a = run_experiment(s);
  const ExperimentResult b = run_experiment(s);
  CHECK(a.exit_code == 0);
  CHECK(a.rows.size() == 4);
  CHECK(a.runs_csv == b.runs_csv);
  CHECK(a.summary_csv == b.summary_csv);
  // Same workload per seed across policies: identical no-caching cost.
  std::int64_t crc_base = -1, ac_base = -1;
  for (const auto& row : a.rows) {
    if (row.policy == PolicyKind::kCrc && row.seed == a.rows[0].seed)
      crc_base = row.metrics.no_cache_cost_hops;
    if (row.policy == PolicyKind::kAllCache && row.seed == a.rows[0].seed)
      ac_base = row.metrics.no_cache_cost_hops;
  }
  CHECK(crc_base == ac_base);
  CHECK(crc_base > 0);
}

TEST_CASE("per-topology normalization emits a cdf table") {
  ExperimentSpec s;
  s.name = "unitcdf";
  s.node_counts = {6};
  s.content_counts = {30};
  s.max_durations = {10};
  s.capacity_mb = {1500, 2500};
  s.subnet = {2, 6};
  s.horizon = 40;
  s.policies = {PolicyKind::kCrc, PolicyKind::kRandomV2};
  s.replications = 3;
  s.seed_base = 21;
  s.cdf_vs_random_v2 = true;

  const ExperimentResult r = run_experiment(s);
  CHECK(r.cdf_csv.rfind("policy,value,fraction\n", 0) == 0);
  CHECK(r.cdf_csv.find("crc,") != std::string::npos);
}

TEST_CASE("cdf normalization reports topologies with a zero denominator") {
  ExperimentSpec s;
  s.name = "zerocdf";
  s.node_counts = {4};
  s.content_counts = {5};
  s.max_durations = {5};
  s.capacity_mb = {200, 300};
  s.subnet = {0, 0};  // no subnetworks: no requests, zero savings everywhere
  s.horizon = 10;
  s.policies = {PolicyKind::kCrc, PolicyKind::kRandomV2};
  s.replications = 2;
  s.cdf_vs_random_v2 = true;
  const ExperimentResult r = run_experiment(s);
  CHECK(r.cdf_csv.find("crc,excluded,2") != std::string::npos);
}
