#include "crcsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "crcsim/rng.hpp"

namespace crcsim {

Slot Catalog::max_effective_duration() const {
  Slot t = 1;
  for (const auto& c : contents)
    t = std::max(t, std::max<Slot>(1, c.window_end - c.window_start));
  return t;
}

DemandModel make_matrix_demand(NodeId n, ContentId m, std::vector<double> matrix) {
  if (matrix.size() != static_cast<std::size_t>(n) * m)
    throw std::invalid_argument("demand matrix: wrong size");
  DemandModel d;
  d.n = n;
  d.matrix = std::move(matrix);
  return d;
}

double expected_request_rate(const Topology& topo, const Catalog& catalog,
                             const DemandModel& demand, NodeId node, ContentId content) {
  if (node >= topo.n) throw std::invalid_argument("expected_request_rate: bad node");
  return demand.rate(topo, catalog, node, content);
}

Catalog generate_catalog(const Topology& topo, ContentId m,
                         std::pair<SizeMb, SizeMb> size_range, Slot max_duration,
                         Slot horizon_slots, double zipf_exponent, std::uint64_t seed,
                         Slot min_duration) {
  if (m < 1) throw std::invalid_argument("catalog: need at least one content");
  if (size_range.first <= 0 || size_range.second < size_range.first)
    throw std::invalid_argument("catalog: bad size range");
  if (min_duration < 1 || max_duration < min_duration)
    throw std::invalid_argument("catalog: bad duration range");
  if (horizon_slots < 1) throw std::invalid_argument("catalog: bad horizon");

  Catalog cat;
  cat.horizon_slots = horizon_slots;
  cat.contents.resize(m);

  double norm = 0.0;
  for (ContentId j = 0; j < m; ++j)
    norm += std::pow(static_cast<double>(j + 1), -zipf_exponent);

  Rng rng(seed);
  const Slot last = horizon_slots - 1;
  for (ContentId j = 0; j < m; ++j) {
    Content& c = cat.contents[j];
    c.source = static_cast<NodeId>(rng.uniform_int(0, topo.n - 1));
    c.size_mb = rng.uniform_int(size_range.first, size_range.second);
    c.duration = static_cast<Slot>(rng.uniform_int(min_duration, max_duration));
    c.popularity = std::pow(static_cast<double>(j + 1), -zipf_exponent) / norm;
    c.window_start = static_cast<Slot>(rng.uniform_int(0, last));
    c.window_end = std::min<Slot>(c.window_start + c.duration, last);
  }
  return cat;
}

std::int64_t draw_request_count(std::uint64_t trace_seed, ContentId content, NodeId node,
                                Slot slot, double mean, double exp_neg_mean) {
  if (mean <= 0.0) return 0;
  // One independent stream per grid cell: the draw is the same whether the
  // trace is materialized in advance or streamed by the engine.
  const std::uint64_t cell = (static_cast<std::uint64_t>(content) << 42) |
                             (static_cast<std::uint64_t>(node) << 21) |
                             static_cast<std::uint64_t>(slot);
  Rng stream = Rng(trace_seed).fork(cell);
  if (exp_neg_mean >= 0.0) return stream.poisson_with_limit(mean, exp_neg_mean);
  return stream.poisson(mean);
}

std::vector<RequestEvent> generate_requests(const Topology& topo, const Catalog& catalog,
                                            const DemandModel& demand, std::uint64_t seed) {
  if (catalog.contents.empty()) throw std::invalid_argument("requests: empty catalog");
  std::vector<RequestEvent> trace;
  for (ContentId j = 0; j < catalog.contents.size(); ++j) {
    const Content& c = catalog.contents[j];
    for (NodeId i = 0; i < topo.n; ++i) {
      const double mean = demand.rate(topo, catalog, i, j);
      if (mean <= 0.0) continue;
      for (Slot t = c.window_start; t <= c.window_end; ++t) {
        const std::int64_t count = draw_request_count(seed, j, i, t, mean);
        if (count > 0) trace.push_back({t, i, j, count});
      }
    }
  }
  std::sort(trace.begin(), trace.end(), [](const RequestEvent& a, const RequestEvent& b) {
    if (a.slot != b.slot) return a.slot < b.slot;
    if (a.content != b.content) return a.content < b.content;
    return a.node < b.node;
  });
  return trace;
}

std::string export_trace(const std::vector<RequestEvent>& trace) {
  std::ostringstream out;
  out << "slot node content count\n";
  for (const auto& e : trace)
    out << e.slot << ' ' << e.node << ' ' << e.content << ' ' << e.count << '\n';
  return out.str();
}

std::vector<RequestEvent> import_trace(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header) || header != "slot node content count")
    throw std::invalid_argument("trace import: bad header");
  std::vector<RequestEvent> trace;
  RequestEvent e;
  while (in >> e.slot >> e.node >> e.content >> e.count) trace.push_back(e);
  return trace;
}

}  // namespace crcsim
