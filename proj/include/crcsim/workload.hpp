#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crcsim/topology.hpp"

namespace crcsim {

// Catalog entry: origin node, size, popularity weight and the effective window
// [window_start, window_end] during which requests may appear. A copy admitted
// at t0 is kept through window_end (the remaining duration at t0).
struct Content {
  NodeId source = 0;
  SizeMb size_mb = 0;
  Slot duration = 1;  // nominal window length before horizon clipping
  double popularity = 0.0;
  Slot window_start = 0;
  Slot window_end = 0;

  Slot remaining(Slot t0) const { return window_end - t0; }
};

struct Catalog {
  Slot horizon_slots = 1000;
  std::vector<Content> contents;

  Slot last_slot() const { return horizon_slots - 1; }
  Slot max_effective_duration() const;  // max over contents of window length
};

// One aggregated arrival: `count` end-node requests for `content` surfacing at
// caching node `node` in `slot`.
struct RequestEvent {
  Slot slot = 0;
  NodeId node = 0;
  ContentId content = 0;
  std::int64_t count = 0;
};

// W_i(tau,j): expected per-slot requests from node i's own subnetwork for
// content j, constant over the content's window. Default form is
// rate_scale * popularity_j * subnet_size_i; scripted instances install an
// explicit per-(content, node) matrix instead.
struct DemandModel {
  double rate_scale = 1.0;
  NodeId n = 0;
  std::vector<double> matrix;  // [content * n + node]; empty = popularity form

  double rate(const Topology& topo, const Catalog& catalog, NodeId node,
              ContentId content) const {
    if (!matrix.empty()) return matrix[static_cast<std::size_t>(content) * n + node];
    return rate_scale * catalog.contents[content].popularity * topo.subnet_size[node];
  }
};

DemandModel make_matrix_demand(NodeId n, ContentId m, std::vector<double> matrix);

double expected_request_rate(const Topology& topo, const Catalog& catalog,
                             const DemandModel& demand, NodeId node, ContentId content);

Catalog generate_catalog(const Topology& topo, ContentId m,
                         std::pair<SizeMb, SizeMb> size_range, Slot max_duration,
                         Slot horizon_slots, double zipf_exponent, std::uint64_t seed,
                         Slot min_duration = 1);

// One Poisson draw for the (content, node, slot) cell, addressable at random
// so the same workload can be materialized up front or streamed slot by slot.
// exp_neg_mean caches exp(-mean) for hot loops; pass a negative value to have
// it computed here.
std::int64_t draw_request_count(std::uint64_t trace_seed, ContentId content, NodeId node,
                                Slot slot, double mean, double exp_neg_mean = -1.0);

// Per-(node, content, slot) counts drawn Poisson with mean W inside the
// window; events sorted by (slot, content, node).
std::vector<RequestEvent> generate_requests(const Topology& topo, const Catalog& catalog,
                                            const DemandModel& demand, std::uint64_t seed);

std::string export_trace(const std::vector<RequestEvent>& trace);
std::vector<RequestEvent> import_trace(const std::string& text);

}  // namespace crcsim
