#include "tlan/network.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <tuple>

namespace tlan {

void NetworkConfig::validate() const {
  if (!(interval_length_s > 0.0)) throw ValidationError("interval_length_s must be > 0");
  if (!(base_headway_s > 0.0)) throw ValidationError("base_headway_s must be > 0");
  if (transition_penalty_factor < 0.0)
    throw ValidationError("transition_penalty_factor must be >= 0");
  if (horizon_intervals < 1) throw ValidationError("horizon_intervals must be >= 1");
}

double compute_free_flow_capacity(const EdgeAttrs& attrs, const NetworkConfig& cfg) {
  const double transit_s = attrs.length_m / attrs.speed_limit_mps;
  const double psi_s = cfg.transition_penalty_factor * transit_s;
  return attrs.length_m / (attrs.speed_limit_mps * cfg.base_headway_s) +
         cfg.interval_length_s / (cfg.base_headway_s + psi_s);
}

double compute_min_travel_time(const EdgeAttrs& attrs, const NetworkConfig& cfg) {
  const double transit_s = attrs.length_m / attrs.speed_limit_mps;
  const double psi_s = cfg.transition_penalty_factor * transit_s;
  return (transit_s + psi_s) / cfg.interval_length_s;
}

void RoadNetwork::add_node(std::int64_t id, std::optional<std::array<double, 2>> xy) {
  if (finalized_) throw ValidationError("network already finalized");
  pending_nodes_.push_back({id, xy});
}

void RoadNetwork::add_edge(std::int64_t edge_id, std::int64_t src, std::int64_t dst,
                           double length_m, double speed_mps, std::optional<double> capacity) {
  if (finalized_) throw ValidationError("network already finalized");
  EdgeAttrs attrs;
  attrs.length_m = length_m;
  attrs.speed_limit_mps = speed_mps;
  attrs.free_flow_capacity = capacity.value_or(0.0);
  pending_edges_.push_back({edge_id, src, dst, attrs, capacity.has_value()});
}

void RoadNetwork::finalize(const NetworkConfig& cfg) {
  if (finalized_) throw ValidationError("network already finalized");
  cfg.validate();
  cfg_ = cfg;

  std::sort(pending_nodes_.begin(), pending_nodes_.end(),
            [](const PendingNode& a, const PendingNode& b) { return a.id < b.id; });
  node_ids_.reserve(pending_nodes_.size());
  for (const auto& n : pending_nodes_) {
    if (!node_index_.emplace(n.id, static_cast<NodeIndex>(node_ids_.size())).second)
      throw ValidationError("duplicate node id " + std::to_string(n.id));
    node_ids_.push_back(n.id);
    node_xy_.push_back(n.xy);
  }

  std::sort(pending_edges_.begin(), pending_edges_.end(),
            [](const PendingEdge& a, const PendingEdge& b) {
              return std::tie(a.src, a.dst, a.id) < std::tie(b.src, b.dst, b.id);
            });
  adj_.assign(node_ids_.size(), {});
  radj_.assign(node_ids_.size(), {});
  edges_.reserve(pending_edges_.size());
  for (const auto& pe : pending_edges_) {
    auto si = node_index_.find(pe.src);
    auto di = node_index_.find(pe.dst);
    if (si == node_index_.end() || di == node_index_.end())
      throw ValidationError("edge " + std::to_string(pe.id) + " references unknown node " +
                            std::to_string(si == node_index_.end() ? pe.src : pe.dst));
    if (pe.src == pe.dst)
      throw ValidationError("self-loop on node " + std::to_string(pe.src));
    if (!(pe.attrs.length_m > 0.0))
      throw ValidationError("edge " + std::to_string(pe.id) + ": length_m must be > 0");
    if (!(pe.attrs.speed_limit_mps > 0.0))
      throw ValidationError("edge " + std::to_string(pe.id) + ": speed_mps must be > 0");
    if (pe.explicit_capacity && !(pe.attrs.free_flow_capacity > 0.0))
      throw ValidationError("edge " + std::to_string(pe.id) + ": capacity must be > 0");

    EdgeRecord rec;
    rec.id = pe.id;
    rec.from = si->second;
    rec.to = di->second;
    rec.attrs = pe.attrs;
    rec.attrs.min_travel_time = compute_min_travel_time(rec.attrs, cfg_);
    if (!pe.explicit_capacity)
      rec.attrs.free_flow_capacity = compute_free_flow_capacity(rec.attrs, cfg_);

    const EdgeIndex e = static_cast<EdgeIndex>(edges_.size());
    if (!edge_index_.emplace(pe.id, e).second)
      throw ValidationError("duplicate edge id " + std::to_string(pe.id));
    for (const OutEdge& oe : adj_[rec.from])
      if (oe.neighbor == rec.to)
        throw ValidationError("duplicate directed edge " + std::to_string(pe.src) + "->" +
                              std::to_string(pe.dst));
    adj_[rec.from].push_back({e, rec.to});
    radj_[rec.to].push_back({e, rec.from});
    edges_.push_back(rec);
  }
  // pending edges were sorted by (src, dst), so adjacency lists are already
  // ordered by neighbor; reverse adjacency needs its own sort
  for (auto& lst : radj_)
    std::sort(lst.begin(), lst.end(),
              [](const OutEdge& a, const OutEdge& b) { return a.neighbor < b.neighbor; });

  pending_nodes_.clear();
  pending_edges_.clear();
  finalized_ = true;
}

std::optional<NodeIndex> RoadNetwork::find_node(std::int64_t id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::array<double, 2>> RoadNetwork::node_xy(NodeIndex i) const {
  return node_xy_[i];
}

std::optional<EdgeIndex> RoadNetwork::find_edge(std::int64_t edge_id) const {
  auto it = edge_index_.find(edge_id);
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

RoadNetwork generate_grid_network(int rows, int cols, double edge_len_m, double speed_mps,
                                  const NetworkConfig& cfg, std::uint64_t seed,
                                  double speed_jitter) {
  if (rows < 2 || cols < 2) throw ValidationError("grid requires rows, cols >= 2");
  RoadNetwork net;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      net.add_node(static_cast<std::int64_t>(r) * cols + c,
                   std::array<double, 2>{c * edge_len_m, r * edge_len_m});

  std::mt19937_64 rng(seed);
  auto jittered_speed = [&] {
    if (speed_jitter <= 0.0) return speed_mps;
    // uniform in [1-j, 1+j] from the top 53 bits; avoids distribution
    // implementation differences
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return speed_mps * (1.0 + speed_jitter * (2.0 * u - 1.0));
  };

  std::int64_t edge_id = 0;
  auto connect = [&](std::int64_t a, std::int64_t b) {
    net.add_edge(edge_id++, a, b, edge_len_m, jittered_speed());
    net.add_edge(edge_id++, b, a, edge_len_m, jittered_speed());
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::int64_t id = static_cast<std::int64_t>(r) * cols + c;
      if (c + 1 < cols) connect(id, id + 1);
      if (r + 1 < rows) connect(id, id + cols);
    }
  net.finalize(cfg);
  return net;
}

std::vector<double> free_flow_heuristic(const RoadNetwork& net, NodeIndex dest) {
  std::vector<double> dist(net.node_count(), kInfCost);
  std::vector<char> settled(net.node_count(), 0);
  using Entry = std::pair<double, NodeIndex>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[dest] = 0.0;
  heap.push({0.0, dest});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (settled[v]) continue;
    settled[v] = 1;
    for (const OutEdge& oe : net.in_edges(v)) {
      const double nd = d + net.edge(oe.edge).attrs.min_travel_time;
      if (nd < dist[oe.neighbor]) {
        dist[oe.neighbor] = nd;
        heap.push({nd, oe.neighbor});
      }
    }
  }
  return dist;
}

}  // namespace tlan
