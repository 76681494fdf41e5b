#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "crcsim/experiment.hpp"
#include "crcsim/oracle.hpp"

namespace {

using namespace crcsim;

int cmd_experiment(const std::string& preset_name, const std::string& config_path,
                   const std::string& out_dir, std::uint64_t seed_override, int seeds,
                   int jobs, bool strict) {
  ExperimentSpec spec;
  if (!config_path.empty())
    spec = parse_config_file(config_path);
  else if (!preset_name.empty())
    spec = preset(preset_name);
  else {
    std::cerr << "experiment: need --preset or --config\n";
    return 2;
  }
  if (!out_dir.empty()) spec.output_dir = out_dir;
  if (seed_override != 0) spec.seed_base = seed_override;
  if (seeds > 0) spec.replications = seeds;
  if (jobs > 0) spec.parallelism = jobs;
  if (strict) spec.strict = true;

  if (spec.name == "prop1" || spec.topo_kind == TopologyKind::kLowerBoundStar) {
    std::vector<NodeId> ns(spec.node_counts.begin(), spec.node_counts.end());
    const auto reports = lower_bound_experiment(ns, spec.policies.front());
    std::ostringstream out;
    out << "n,sum_gk_over_2k,min_gk_over_2k,bound_2_over_log2n\n";
    for (const auto& r : reports)
      out << r.n << ',' << r.sum_ratio << ',' << r.min_ratio << ',' << r.bound << '\n';
    std::filesystem::create_directories(spec.output_dir);
    const std::string path = spec.output_dir + "/" + spec.name + "_lower_bound.csv";
    std::ofstream f(path, std::ios::binary);
    f << out.str();
    std::cout << out.str();
    std::cout << "wrote " << path << "\n";
    return 0;
  }

  const ExperimentResult result = run_experiment(spec);
  for (const std::string& p : write_experiment_files(spec, result))
    std::cout << "wrote " << p << "\n";
  if (!result.error.empty()) std::cerr << "error: " << result.error << "\n";
  return result.exit_code;
}

int cmd_simulate(int nodes, int contents, int duration, const std::string& policy_name,
                 std::uint64_t seed, double zipf, double rate_scale,
                 std::int64_t cap_lo, std::int64_t cap_hi, int horizon, double noise) {
  const auto policy = parse_policy(policy_name);
  if (!policy) {
    std::cerr << "simulate: unknown policy '" << policy_name << "'\n";
    return 2;
  }
  Instance inst;
  inst.topo = build_random_topology(static_cast<NodeId>(nodes), seed, {cap_lo, cap_hi},
                                    {10, 90});
  inst.routes = build_routing(inst.topo);
  inst.catalog = generate_catalog(inst.topo, static_cast<ContentId>(contents), {100, 150},
                                  duration, horizon, zipf, seed ^ 0xca7a106ULL);
  inst.demand.rate_scale = rate_scale;
  inst.dense_trace = true;
  inst.trace_seed = seed ^ 0x7eaceULL;

  RunSettings settings;
  settings.policy = *policy;
  settings.seed = seed;
  settings.expectation_noise = noise;
  const RunMetrics m = run(inst, settings);

  RunRow row;
  row.preset = "simulate";
  row.nodes = nodes;
  row.contents = contents;
  row.max_duration = duration;
  row.capacity_lo = cap_lo;
  row.capacity_hi = cap_hi;
  row.policy = *policy;
  row.seed = seed;
  row.metrics = m;
  std::cout << metrics_csv_header() << metrics_csv_row(row);
  return m.capacity_violations == 0 ? 0 : 1;
}

int cmd_oracle_stars(int count, int leaves, int contents, int horizon,
                     std::uint64_t budget, const std::string& out_path) {
  std::ostringstream out;
  out << "instance,policy,online,offline,ratio,bound\n";
  bool ok = true;
  for (int i = 0; i < count; ++i) {
    const Instance inst = make_star_instance(1000 + i, leaves, contents, horizon);
    const RatioReport rep = competitive_ratio(inst, PolicyKind::kCrc, budget);
    out << i << ",crc," << rep.online_savings << ',' << rep.offline_savings << ','
        << rep.ratio << ',' << rep.bound << '\n';
    if (!(rep.offline_savings + 1e-9 >= rep.online_savings) || rep.ratio > rep.bound)
      ok = false;
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(out_path, std::ios::binary);
    f << out.str();
    std::cout << "wrote " << out_path << "\n";
  }
  return ok ? 0 : 1;
}

int cmd_topology(int nodes, std::uint64_t seed, const std::string& kind,
                 const std::string& out_path, const std::string& check_path) {
  if (!check_path.empty()) {
    std::ifstream in(check_path);
    if (!in) {
      std::cerr << "topology: cannot open " << check_path << "\n";
      return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const Topology t = import_topology(buf.str());
    const std::string round = export_topology(t);
    if (round != buf.str()) {
      std::cerr << "topology: file is not in canonical export form\n";
      return 1;
    }
    std::cout << "ok: " << t.n << " nodes, " << t.edges.size() << " edges\n";
    return 0;
  }
  Topology t;
  if (kind == "random")
    t = build_random_topology(static_cast<NodeId>(nodes), seed, {750000, 1000000}, {10, 90});
  else if (kind == "small_world")
    t = build_small_world_topology(static_cast<NodeId>(nodes), 6, 0.1, seed,
                                   {750000, 1000000}, {10, 90});
  else {
    std::cerr << "topology: unknown kind '" << kind << "'\n";
    return 2;
  }
  const std::string text = export_topology(t);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out_path, std::ios::binary);
    f << text;
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_trace(int nodes, int contents, int duration, int horizon, double zipf,
              double rate_scale, std::uint64_t seed, const std::string& out_path) {
  const Topology topo =
      build_random_topology(static_cast<NodeId>(nodes), seed, {750000, 1000000}, {10, 90});
  const Catalog catalog = generate_catalog(topo, static_cast<ContentId>(contents),
                                           {100, 150}, duration, horizon, zipf,
                                           seed ^ 0xca7a106ULL);
  DemandModel demand;
  demand.rate_scale = rate_scale;
  const auto trace = generate_requests(topo, catalog, demand, seed ^ 0x7eaceULL);
  const std::string text = export_trace(trace);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out_path, std::ios::binary);
    f << text;
    std::cout << "wrote " << out_path << " (" << trace.size() << " events)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crcsim: en-route caching simulator with cost-reward admission"};
  app.require_subcommand(1);

  // experiment
  std::string preset_name, config_path, out_dir;
  std::uint64_t seed_override = 0;
  int seeds = 0, jobs = 0;
  bool strict = false;
  auto* exp = app.add_subcommand("experiment", "run a preset or configured experiment grid");
  exp->add_option("--preset", preset_name, "preset name: " + [] {
        std::string s;
        for (const auto& n : crcsim::preset_names()) s += n + " ";
        return s;
      }());
  exp->add_option("--config", config_path, "JSON config path (overrides preset)");
  exp->add_option("--out", out_dir, "output directory");
  exp->add_option("--seed-base", seed_override, "override the base seed");
  exp->add_option("--seeds", seeds, "override the replication count");
  exp->add_option("--jobs", jobs, "worker threads (0 = hardware)");
  exp->add_flag("--strict", strict, "abort on any soft assertion instead of warning");

  // simulate
  int s_nodes = 30, s_contents = 2000, s_duration = 150, s_horizon = 1000;
  std::string s_policy = "crc";
  std::uint64_t s_seed = 1;
  double s_zipf = 0.8, s_rate = 1.0, s_noise = 0.0;
  std::int64_t s_cap_lo = 750000, s_cap_hi = 1000000;
  auto* sim = app.add_subcommand("simulate", "single run, metrics row to stdout");
  sim->add_option("--nodes", s_nodes);
  sim->add_option("--contents", s_contents);
  sim->add_option("--duration", s_duration);
  sim->add_option("--horizon", s_horizon);
  sim->add_option("--policy", s_policy);
  sim->add_option("--seed", s_seed);
  sim->add_option("--zipf", s_zipf);
  sim->add_option("--rate-scale", s_rate);
  sim->add_option("--noise", s_noise);
  sim->add_option("--capacity-lo", s_cap_lo);
  sim->add_option("--capacity-hi", s_cap_hi);

  // oracle-stars
  int o_count = 50, o_leaves = 3, o_contents = 5, o_horizon = 8;
  std::uint64_t o_budget = 1ull << 20;
  std::string o_out;
  auto* stars = app.add_subcommand("oracle-stars",
                                   "competitive ratios on random single-cache stars");
  stars->add_option("--count", o_count);
  stars->add_option("--leaves", o_leaves);
  stars->add_option("--contents", o_contents);
  stars->add_option("--horizon", o_horizon);
  stars->add_option("--budget", o_budget);
  stars->add_option("--out", o_out);

  // prop1
  std::vector<int> p_ns{4, 8, 16, 32};
  std::string p_policy = "crc";
  auto* prop1 = app.add_subcommand("prop1", "adversarial lower-bound experiment");
  prop1->add_option("--n", p_ns, "requester counts (powers of two)");
  prop1->add_option("--policy", p_policy);

  // topology / trace utilities
  int t_nodes = 30;
  std::uint64_t t_seed = 7;
  std::string t_kind = "random", t_out, t_check;
  auto* topo = app.add_subcommand("topology", "generate/export or validate a topology file");
  topo->add_option("--nodes", t_nodes);
  topo->add_option("--seed", t_seed);
  topo->add_option("--kind", t_kind);
  topo->add_option("--out", t_out);
  topo->add_option("--check", t_check, "validate a previously exported file");

  int r_nodes = 30, r_contents = 2000, r_duration = 150, r_horizon = 1000;
  double r_zipf = 0.8, r_rate = 1.0;
  std::uint64_t r_seed = 7;
  std::string r_out;
  auto* trace = app.add_subcommand("trace", "generate and export a request trace");
  trace->add_option("--nodes", r_nodes);
  trace->add_option("--contents", r_contents);
  trace->add_option("--duration", r_duration);
  trace->add_option("--horizon", r_horizon);
  trace->add_option("--zipf", r_zipf);
  trace->add_option("--rate-scale", r_rate);
  trace->add_option("--seed", r_seed);
  trace->add_option("--out", r_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (exp->parsed())
      return cmd_experiment(preset_name, config_path, out_dir, seed_override, seeds, jobs,
                            strict);
    if (sim->parsed())
      return cmd_simulate(s_nodes, s_contents, s_duration, s_policy, s_seed, s_zipf,
                          s_rate, s_cap_lo, s_cap_hi, s_horizon, s_noise);
    if (stars->parsed())
      return cmd_oracle_stars(o_count, o_leaves, o_contents, o_horizon, o_budget, o_out);
    if (prop1->parsed()) {
      const auto policy = crcsim::parse_policy(p_policy);
      if (!policy) {
        std::cerr << "prop1: unknown policy '" << p_policy << "'\n";
        return 2;
      }
      std::cout << "n,sum_gk_over_2k,min_gk_over_2k,bound_2_over_log2n\n";
      for (int n : p_ns) {
        const auto rep = crcsim::lower_bound_experiment_run(static_cast<crcsim::NodeId>(n),
                                                            *policy);
        std::cout << rep.n << ',' << rep.sum_ratio << ',' << rep.min_ratio << ','
                  << rep.bound << '\n';
      }
      return 0;
    }
    if (topo->parsed()) return cmd_topology(t_nodes, t_seed, t_kind, t_out, t_check);
    if (trace->parsed())
      return cmd_trace(r_nodes, r_contents, r_duration, r_horizon, r_zipf, r_rate, r_seed,
                       r_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
