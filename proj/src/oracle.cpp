#include "crcsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "crcsim/rng.hpp"

namespace crcsim {

namespace {

// Replays a trace against a placement schedule. Paths are resolved once; the
// per-score state is reset cheaply so the enumerators can reuse one scorer.
class PlacementScorer {
 public:
  PlacementScorer(const Instance& instance, ServingModel model)
      : instance_(instance), model_(model) {
    event_paths_.reserve(instance.trace.size());
    for (const RequestEvent& e : instance.trace)
      event_paths_.push_back(
          instance.routes.path(e.node, instance.catalog.contents[e.content].source));
    occupied_.assign(static_cast<std::size_t>(instance.topo.n) *
                         instance.catalog.horizon_slots,
                     0);
    holders_.assign(instance.catalog.contents.size(), {});
  }

  ScoreResult score(const PlacementSchedule& schedule) {
    reset();
    done_.assign(schedule.size(), 0);
    std::int64_t savings = 0;

    for (std::size_t ev = 0; ev < instance_.trace.size(); ++ev) {
      const RequestEvent& e = instance_.trace[ev];
      const std::vector<NodeId>& path = event_paths_[ev];
      const std::size_t w_idx = serving_index(path, e.content, e.slot);
      const Hops to_source = static_cast<Hops>(path.size() - 1);
      const Hops dist = model_ == ServingModel::kEnRoute
                            ? static_cast<Hops>(w_idx)
                            : nearest_distance(e.node, e.content, e.slot);
      savings += e.count * (to_source - dist);

      // Admissions ride back with the content: a scheduled action at this
      // slot materializes if the request actually reached its node.
      for (std::size_t s = 0; s < schedule.size(); ++s) {
        if (done_[s]) continue;
        const PlacementAction& a = schedule[s];
        if (a.slot != e.slot || a.content != e.content) continue;
        for (std::size_t idx = 0; idx < w_idx; ++idx) {
          if (path[idx] == a.node) {
            if (!materialize(a)) return {false, 0};
            done_[s] = 1;
            break;
          }
        }
      }
    }
    for (char d : done_)
      if (!d) return {false, 0};
    return {true, savings};
  }

 private:
  void reset() {
    for (std::size_t key : dirty_) occupied_[key] = 0;
    dirty_.clear();
    for (auto& h : holders_) h.clear();
  }

  bool holder_live(ContentId j, NodeId node, Slot slot) const {
    for (const auto& [h, admit] : holders_[j])
      if (h == node && admit <= slot && slot <= instance_.catalog.contents[j].window_end)
        return true;
    return false;
  }

  std::size_t serving_index(const std::vector<NodeId>& path, ContentId j,
                            Slot slot) const {
    for (std::size_t idx = 0; idx + 1 < path.size(); ++idx)
      if (holder_live(j, path[idx], slot)) return idx;
    return path.size() - 1;
  }

  Hops nearest_distance(NodeId requester, ContentId j, Slot slot) const {
    const Content& c = instance_.catalog.contents[j];
    Hops best = instance_.routes.distance(requester, c.source);
    for (const auto& [h, admit] : holders_[j])
      if (admit <= slot && slot <= c.window_end)
        best = std::min(best, instance_.routes.distance(requester, h));
    return best;
  }

  bool materialize(const PlacementAction& a) {
    const Content& c = instance_.catalog.contents[a.content];
    if (a.node == c.source || instance_.topo.capacity_mb[a.node] == 0) return false;
    if (holder_live(a.content, a.node, a.slot)) return false;
    const Slot last = std::min<Slot>(c.window_end, instance_.catalog.horizon_slots - 1);
    const std::size_t base =
        static_cast<std::size_t>(a.node) * instance_.catalog.horizon_slots;
    for (Slot t = a.slot; t <= last; ++t)
      if (occupied_[base + t] + c.size_mb > instance_.topo.capacity_mb[a.node])
        return false;
    for (Slot t = a.slot; t <= last; ++t) {
      occupied_[base + t] += c.size_mb;
      dirty_.push_back(base + static_cast<std::size_t>(t));
    }
    holders_[a.content].push_back({a.node, a.slot});
    return true;
  }

  const Instance& instance_;
  ServingModel model_;
  std::vector<std::vector<NodeId>> event_paths_;
  std::vector<SizeMb> occupied_;
  std::vector<std::size_t> dirty_;
  std::vector<std::vector<std::pair<NodeId, Slot>>> holders_;
  std::vector<char> done_;
};

struct DecisionSpace {
  struct PairOptions {
    NodeId node;
    ContentId content;
    std::vector<Slot> slots;  // candidate admission slots; the 0th option is "none"
  };
  std::vector<PairOptions> pairs;
  std::uint64_t combinations = 1;
};

DecisionSpace build_space(const Instance& instance, std::uint64_t budget) {
  // Candidate slots per (node, content): slots of trace events whose fixed
  // path passes the node on the way to the source.
  std::map<std::pair<NodeId, ContentId>, std::vector<Slot>> cand;
  for (const RequestEvent& e : instance.trace) {
    const Content& c = instance.catalog.contents[e.content];
    if (e.node == c.source) continue;
    const std::vector<NodeId> path = instance.routes.path(e.node, c.source);
    for (std::size_t idx = 0; idx + 1 < path.size(); ++idx) {
      const NodeId u = path[idx];
      if (instance.topo.capacity_mb[u] == 0) continue;
      auto& slots = cand[{u, e.content}];
      if (slots.empty() || slots.back() != e.slot) slots.push_back(e.slot);
    }
  }
  DecisionSpace space;
  for (auto& [key, slots] : cand) {
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
    space.pairs.push_back({key.first, key.second, std::move(slots)});
  }
  for (const auto& p : space.pairs) {
    const std::uint64_t options = p.slots.size() + 1;
    if (space.combinations > budget / options)
      throw std::invalid_argument("oracle: decision space exceeds budget");
    space.combinations *= options;
  }
  return space;
}

}  // namespace

ScoreResult score_placement(const Instance& instance, const PlacementSchedule& schedule,
                            ServingModel model) {
  PlacementScorer scorer(instance, model);
  return scorer.score(schedule);
}

OracleResult optimal_placement(const Instance& instance, std::uint64_t budget,
                               ServingModel model) {
  const DecisionSpace space = build_space(instance, budget);
  PlacementScorer scorer(instance, model);
  OracleResult result;
  PlacementSchedule schedule;
  for (std::uint64_t code = 0; code < space.combinations; ++code) {
    schedule.clear();
    std::uint64_t rest = code;
    for (const auto& p : space.pairs) {
      const std::uint64_t options = p.slots.size() + 1;
      const std::uint64_t pick = rest % options;
      rest /= options;
      if (pick > 0) schedule.push_back({p.node, p.content, p.slots[pick - 1]});
    }
    ++result.vectors_examined;
    const ScoreResult score = scorer.score(schedule);
    if (score.feasible && score.savings > result.savings) {
      result.savings = score.savings;
      result.best = schedule;
    }
  }
  return result;
}

namespace {

void recurse(const DecisionSpace& space, PlacementScorer& scorer, std::size_t level,
             PlacementSchedule& partial, std::int64_t upper_bound, OracleResult& result) {
  if (level == space.pairs.size()) {
    ++result.vectors_examined;
    const ScoreResult score = scorer.score(partial);
    if (score.feasible && score.savings > result.savings) {
      result.savings = score.savings;
      result.best = partial;
    }
    return;
  }
  if (upper_bound <= result.savings && result.savings > 0) return;
  const auto& p = space.pairs[level];
  recurse(space, scorer, level + 1, partial, upper_bound, result);
  for (Slot s : p.slots) {
    partial.push_back({p.node, p.content, s});
    recurse(space, scorer, level + 1, partial, upper_bound, result);
    partial.pop_back();
  }
}

}  // namespace

OracleResult optimal_placement_recursive(const Instance& instance, std::uint64_t budget,
                                         ServingModel model) {
  const DecisionSpace space = build_space(instance, budget);
  PlacementScorer scorer(instance, model);
  // Loose bound: no placement saves more than every request's full path.
  std::int64_t bound = 0;
  for (const RequestEvent& e : instance.trace)
    bound += e.count *
             instance.routes.distance(e.node, instance.catalog.contents[e.content].source);
  OracleResult result;
  PlacementSchedule partial;
  recurse(space, scorer, 0, partial, bound, result);
  return result;
}

RatioReport competitive_ratio(const Instance& instance, PolicyKind policy,
                              std::uint64_t budget, ServingModel model,
                              std::uint64_t seed) {
  RunSettings settings;
  settings.policy = policy;
  settings.seed = seed;
  const RunMetrics online = run(instance, settings);
  const OracleResult offline = optimal_placement(instance, budget, model);
  if (static_cast<double>(offline.savings) + 1e-9 <
      static_cast<double>(online.realized_savings))
    throw std::logic_error("oracle: offline dominated by online");

  RatioReport rep;
  rep.offline_savings = static_cast<double>(offline.savings);
  rep.online_savings = static_cast<double>(online.realized_savings);
  rep.ratio = online.realized_savings > 0
                  ? rep.offline_savings / rep.online_savings
                  : std::numeric_limits<double>::infinity();
  rep.bound = 2.0 * std::log2(2.0 * online.assumptions.mu);
  return rep;
}

LowerBoundInstance make_lower_bound_instance(NodeId n_leaves, double alpha) {
  if (n_leaves < 1 || (n_leaves & (n_leaves - 1)) != 0)
    throw std::invalid_argument("lower bound: n must be a power of two");
  const double inv = 1.0 / alpha;
  const int per_phase = static_cast<int>(std::llround(inv));
  if (per_phase < 1 || std::abs(inv - per_phase) > 1e-9)
    throw std::invalid_argument("lower bound: 1/alpha must be an integer");

  const SizeMb capacity = 1000;
  const SizeMb content_size = static_cast<SizeMb>(std::llround(alpha * capacity));
  if (content_size * per_phase != capacity)
    throw std::invalid_argument("lower bound: alpha does not divide the unit capacity");

  LowerBoundInstance lb;
  lb.alpha = alpha;
  int phases = 1;
  while ((1u << (phases - 1)) < n_leaves) ++phases;  // log2(n) + 1 phases
  lb.phases = phases;

  Instance& inst = lb.instance;
  inst.topo = build_lower_bound_star(n_leaves, capacity);
  inst.routes = build_routing(inst.topo);

  // Two-slot effective window: slot 1 presents the contents sequentially,
  // slot 2 carries the repeat requests the cached copies can serve.
  inst.catalog.horizon_slots = 3;
  const int m = phases * per_phase;
  std::vector<double> matrix(static_cast<std::size_t>(m) * inst.topo.n, 0.0);
  for (int phase = 0; phase < phases; ++phase) {
    const NodeId destined = 1u << phase;
    for (int rep = 0; rep < per_phase; ++rep) {
      Content c;
      c.source = 0;
      c.size_mb = content_size;
      c.duration = 1;
      c.popularity = 1.0 / m;
      c.window_start = 1;
      c.window_end = 2;
      const ContentId j = static_cast<ContentId>(inst.catalog.contents.size());
      inst.catalog.contents.push_back(c);
      lb.phase_of_content.push_back(phase);
      for (NodeId leaf = 0; leaf < destined; ++leaf)
        matrix[static_cast<std::size_t>(j) * inst.topo.n + (2 + leaf)] = 1.0;
    }
  }
  inst.demand = make_matrix_demand(inst.topo.n, static_cast<ContentId>(m), std::move(matrix));

  // Slot 1: one aggregated presentation per content (the trigger pays full
  // cost). Slot 2: one request per destined leaf.
  for (ContentId j = 0; j < static_cast<ContentId>(m); ++j) {
    const std::int64_t destined = 1 << lb.phase_of_content[j];
    inst.trace.push_back({1, 2, j, destined});
  }
  for (ContentId j = 0; j < static_cast<ContentId>(m); ++j) {
    const NodeId destined = 1u << lb.phase_of_content[j];
    for (NodeId leaf = 0; leaf < destined; ++leaf)
      inst.trace.push_back({2, 2 + leaf, j, 1});
  }
  return lb;
}

LowerBoundReport lower_bound_experiment_run(NodeId n_leaves, PolicyKind policy,
                                            double alpha) {
  const LowerBoundInstance lb = make_lower_bound_instance(n_leaves, alpha);
  RunSettings settings;
  settings.policy = policy;
  settings.track_per_content = true;
  const RunMetrics metrics = run(lb.instance, settings);

  LowerBoundReport rep;
  rep.n = n_leaves;
  std::vector<double> per_phase(lb.phases, 0.0);
  for (ContentId j = 0; j < metrics.realized_by_content.size(); ++j)
    per_phase[lb.phase_of_content[j]] += alpha * metrics.realized_by_content[j];

  rep.g_cumulative.resize(lb.phases);
  double acc = 0.0;
  rep.sum_ratio = 0.0;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (int k = 0; k < lb.phases; ++k) {
    acc += per_phase[k];
    rep.g_cumulative[k] = acc;
    const double ratio = acc / static_cast<double>(1u << k);
    rep.sum_ratio += ratio;
    rep.min_ratio = std::min(rep.min_ratio, ratio);
  }
  rep.bound = n_leaves > 1 ? 2.0 / std::log2(static_cast<double>(n_leaves))
                           : std::numeric_limits<double>::infinity();
  return rep;
}

std::vector<LowerBoundReport> lower_bound_experiment(const std::vector<NodeId>& n_values,
                                                     PolicyKind policy, double alpha) {
  std::vector<LowerBoundReport> out;
  out.reserve(n_values.size());
  for (NodeId n : n_values) out.push_back(lower_bound_experiment_run(n, policy, alpha));
  return out;
}

Instance make_star_instance(std::uint64_t seed, int leaves, int contents, Slot horizon) {
  if (leaves < 1 || contents < 1 || horizon < 2)
    throw std::invalid_argument("star instance: bad shape");
  Rng rng(seed);

  Instance inst;
  // Source 0, hub 1 (the only caching node), requester leaves 2..leaves+1.
  const NodeId n = static_cast<NodeId>(leaves + 2);
  std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}};
  for (NodeId leaf = 2; leaf < n; ++leaf) edges.emplace_back(1, leaf);
  std::vector<SizeMb> caps(n, 0);
  caps[1] = rng.uniform_int(300, 600);
  std::vector<std::int32_t> subs(n, 0);
  for (NodeId leaf = 2; leaf < n; ++leaf)
    subs[leaf] = static_cast<std::int32_t>(rng.uniform_int(1, 4));
  inst.topo = make_topology(TopologyKind::kExplicit, n, std::move(edges), std::move(caps),
                            std::move(subs));
  inst.routes = build_routing(inst.topo);

  inst.catalog.horizon_slots = horizon;
  double total = 0.0;
  for (int j = 0; j < contents; ++j) {
    Content c;
    c.source = 0;
    c.size_mb = rng.uniform_int(80, 200);
    c.window_start = static_cast<Slot>(rng.uniform_int(0, horizon / 2));
    c.duration = static_cast<Slot>(rng.uniform_int(2, horizon - 1));
    c.window_end = std::min<Slot>(c.window_start + c.duration, horizon - 1);
    c.popularity = rng.uniform_real(0.2, 1.0);
    total += c.popularity;
    inst.catalog.contents.push_back(c);
  }
  for (auto& c : inst.catalog.contents) c.popularity /= total;
  inst.demand.rate_scale = rng.uniform_real(1.0, 4.0);

  // Lift the request volume so the demand-density lower bound holds; the
  // trace is drawn afterwards so realized counts track the expectations.
  ExpectationTable table(inst.topo, inst.routes, inst.catalog, inst.demand);
  const auto report = validate_assumptions(inst.topo, inst.routes, inst.catalog, table);
  if (!report.density_lower_ok && report.min_ratio > 0.0)
    inst.demand.rate_scale /= report.min_ratio;

  inst.trace = generate_requests(inst.topo, inst.catalog, inst.demand, seed ^ 0x5741ULL);
  return inst;
}

}  // namespace crcsim
