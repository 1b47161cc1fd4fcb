#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tlan/types.hpp"

namespace tlan {

/// Global modelling parameters. All second-valued inputs are converted to
/// interval units (interval_length_s == 1.0 internally) at ingestion.
struct NetworkConfig {
  double interval_length_s = 360.0;
  double base_headway_s = 3.0;
  /// Transition-penalty factor; the per-edge penalty is factor * (length/speed) seconds.
  double transition_penalty_factor = 0.5;
  int horizon_intervals = 1;
  double time_origin_s = 0.0;

  void validate() const;

  double seconds_to_intervals(double s) const {
    return (s - time_origin_s) / interval_length_s;
  }
  double intervals_to_seconds(double t) const {
    return t * interval_length_s + time_origin_s;
  }
  double span_seconds_to_intervals(double s) const { return s / interval_length_s; }
};

/// Per-edge attributes. min_travel_time and free_flow_capacity are derived
/// from length/speed and the config unless capacity is supplied explicitly.
struct EdgeAttrs {
  double length_m = 0.0;
  double speed_limit_mps = 0.0;
  double min_travel_time = 0.0;     // interval units, transition penalty folded in
  double free_flow_capacity = 0.0;  // vehicles, real-valued
};

/// Vehicles that can traverse the edge at the speed limit within one
/// interval while keeping the base headway: length/(speed*headway) plus the
/// inflow term interval/(headway+psi). Kept real-valued; load checks compare
/// l against it directly.
double compute_free_flow_capacity(const EdgeAttrs& attrs, const NetworkConfig& cfg);

/// Minimum traversal time in interval units, (length/speed + psi) / interval,
/// with psi = factor * (length/speed) seconds folded in.
double compute_min_travel_time(const EdgeAttrs& attrs, const NetworkConfig& cfg);

struct EdgeRecord {
  std::int64_t id = 0;
  NodeIndex from = kInvalidNode;
  NodeIndex to = kInvalidNode;
  EdgeAttrs attrs;
};

struct OutEdge {
  EdgeIndex edge;
  NodeIndex neighbor;
};

/// Directed road network. Mutable while being populated; immutable after
/// finalize(), at which point it is safe for concurrent shared reads.
class RoadNetwork {
 public:
  void add_node(std::int64_t id, std::optional<std::array<double, 2>> xy = std::nullopt);
  void add_edge(std::int64_t edge_id, std::int64_t src, std::int64_t dst, double length_m,
                double speed_mps, std::optional<double> capacity = std::nullopt);

  /// Sorts nodes by external id, builds adjacency, derives per-edge
  /// min_travel_time / free_flow_capacity, and validates invariants
  /// (no self-loops, no dangling endpoints, at most one edge per ordered
  /// pair, positive attributes).
  void finalize(const NetworkConfig& cfg);

  bool finalized() const { return finalized_; }
  const NetworkConfig& config() const { return cfg_; }

  std::size_t node_count() const { return node_ids_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  std::int64_t node_id(NodeIndex i) const { return node_ids_[i]; }
  std::optional<NodeIndex> find_node(std::int64_t id) const;
  std::optional<std::array<double, 2>> node_xy(NodeIndex i) const;

  const EdgeRecord& edge(EdgeIndex e) const { return edges_[e]; }
  std::optional<EdgeIndex> find_edge(std::int64_t edge_id) const;

  std::span<const OutEdge> out_edges(NodeIndex v) const {
    return {adj_[v].data(), adj_[v].size()};
  }
  std::span<const OutEdge> in_edges(NodeIndex v) const {
    return {radj_[v].data(), radj_[v].size()};
  }

 private:
  struct PendingEdge {
    std::int64_t id;
    std::int64_t src;
    std::int64_t dst;
    EdgeAttrs attrs;
    bool explicit_capacity;
  };
  struct PendingNode {
    std::int64_t id;
    std::optional<std::array<double, 2>> xy;
  };

  std::vector<PendingNode> pending_nodes_;
  std::vector<PendingEdge> pending_edges_;

  NetworkConfig cfg_;
  bool finalized_ = false;
  std::vector<std::int64_t> node_ids_;
  std::vector<std::optional<std::array<double, 2>>> node_xy_;
  std::unordered_map<std::int64_t, NodeIndex> node_index_;
  std::vector<EdgeRecord> edges_;
  std::unordered_map<std::int64_t, EdgeIndex> edge_index_;
  std::vector<std::vector<OutEdge>> adj_;
  std::vector<std::vector<OutEdge>> radj_;
};

/// Bidirectional rows x cols grid; node id = row*cols + col, coordinates in
/// meters. speed_jitter draws a per-directed-edge factor in
/// [1-jitter, 1+jitter] from the seed, which keeps shortest paths unique.
RoadNetwork generate_grid_network(int rows, int cols, double edge_len_m, double speed_mps,
                                  const NetworkConfig& cfg, std::uint64_t seed,
                                  double speed_jitter = 0.0);

/// Exact free-flow shortest distance (interval units) from every node to
/// dest, by reverse Dijkstra over min travel times. Unreachable nodes map to
/// +inf. Admissible lower bound on any load-aware cost.
std::vector<double> free_flow_heuristic(const RoadNetwork& net, NodeIndex dest);

}  // namespace tlan
