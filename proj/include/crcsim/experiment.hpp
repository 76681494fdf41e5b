#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crcsim/engine.hpp"

namespace crcsim {

// One experiment = a sweep grid (nodes x contents x durations x capacities)
// replicated over seeds, with every policy run on the same per-seed workload.
struct ExperimentSpec {
  std::string name = "custom";
  TopologyKind topo_kind = TopologyKind::kRandom;
  int mean_degree = 6;          // small-world only
  double rewire_prob = 0.1;     // small-world only
  std::vector<int> node_counts = {30};
  std::vector<int> content_counts = {10000};
  std::vector<Slot> max_durations = {150};
  Slot min_duration = 1;  // = max for fixed-duration scenarios
  std::vector<std::pair<SizeMb, SizeMb>> capacity_sweep;  // empty = {capacity_mb}
  std::pair<SizeMb, SizeMb> capacity_mb = {750000, 1000000};
  std::pair<std::int32_t, std::int32_t> subnet = {10, 90};
  std::pair<SizeMb, SizeMb> size_mb = {100, 150};
  Slot horizon = 1000;
  double zipf = 0.8;
  double rate_scale = 1.0;
  double noise = 0.0;
  bool auto_rescale = false;  // lift rate_scale until the demand lower bound holds
  std::vector<PolicyKind> policies = {PolicyKind::kCrc};
  int replications = 10;
  std::uint64_t seed_base = 1;
  std::string output_dir = "results";
  int parallelism = 0;  // 0 = hardware concurrency
  bool strict = false;
  bool cdf_vs_random_v2 = false;  // per-topology normalization output
};

bool operator==(const ExperimentSpec& a, const ExperimentSpec& b);

// Named configurations for the standard experiment grids; see README.
std::vector<std::string> preset_names();
ExperimentSpec preset(const std::string& name);

ExperimentSpec parse_config(const std::string& json_text);
ExperimentSpec parse_config_file(const std::string& path);
std::string emit_config(const ExperimentSpec& spec);

struct RunRow {
  std::string preset;
  int nodes = 0;
  int contents = 0;
  Slot max_duration = 0;
  SizeMb capacity_lo = 0;
  SizeMb capacity_hi = 0;
  PolicyKind policy = PolicyKind::kCrc;
  std::uint64_t seed = 0;
  RunMetrics metrics;
};

struct ExperimentResult {
  std::vector<RunRow> rows;
  std::string runs_csv;
  std::string summary_csv;
  std::string cdf_csv;   // only when cdf_vs_random_v2
  std::string error;     // first failure message, if any
  int exit_code = 0;     // nonzero iff an assertion fired in any run
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Writes runs.csv / summary.csv (and cdf.csv when present) under
// spec.output_dir; returns the file paths.
std::vector<std::string> write_experiment_files(const ExperimentSpec& spec,
                                                const ExperimentResult& result);

std::string metrics_csv_header();
std::string metrics_csv_row(const RunRow& row);

}  // namespace crcsim
