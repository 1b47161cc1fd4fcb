#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "tlan/elm.hpp"
#include "tlan/network.hpp"
#include "tlan/types.hpp"

namespace tlan {

struct Query {
  std::int64_t id = 0;
  NodeIndex source = kInvalidNode;
  NodeIndex destination = kInvalidNode;
  double depart = 0.0;  // interval units
};

struct Hop {
  EdgeIndex edge = kInvalidEdge;
  double entry = 0.0;
  double exit = 0.0;
};

/// Time-annotated walk from source to destination. free_flow_cost carries the
/// query's theoretical free-flow optimum |phi|, so
/// penalty = total_arrival - depart - free_flow_cost >= 0.
struct Path {
  std::int64_t query_id = 0;
  std::vector<Hop> hops;
  double total_arrival = 0.0;
  double free_flow_cost = 0.0;

  double depart() const { return hops.empty() ? total_arrival : hops.front().entry; }
  double duration() const { return total_arrival - depart(); }
  std::vector<EdgeIndex> edge_sequence() const;
};

enum class RouteStatus { kOk, kNoPath, kHorizonOverflow };

struct RouteResult {
  RouteStatus status = RouteStatus::kNoPath;
  Path path;  // valid iff status == kOk

  bool ok() const { return status == RouteStatus::kOk; }
};

const char* to_string(RouteStatus s);

/// Free-flow shortest path (minimum sum of min travel times), loads ignored.
/// Deterministic: equal-cost ties resolve to the lexicographically smallest
/// (predecessor node, edge) pair.
RouteResult dijkstra_free_flow(const RoadNetwork& net, const Query& q);

/// Temporal load-aware A*: earliest arrival at the destination under the
/// current loads, expanding by arrival-so-far plus the free-flow heuristic.
/// FIFO compliance makes settled nodes final. heuristic must come from
/// free_flow_heuristic(net, q.destination).
RouteResult tlaa_star(const RoadNetwork& net, const LoadSource& loads, const Query& q,
                      const std::vector<double>& heuristic);

/// Same search as tlaa_star but every load read is pinned to the query's
/// departure interval (static snapshot); recorded times are the snapshot
/// estimates.
RouteResult slad(const RoadNetwork& net, const LoadSource& loads, const Query& q,
                 const std::vector<double>& heuristic);

/// Up to k loopless free-flow shortest paths (Yen), nondecreasing cost,
/// pairwise distinct edge sequences, deterministic. Each returned Path is
/// free-flow time-annotated from q.depart and its free_flow_cost is its own
/// cost.
std::vector<Path> yen_k_shortest(const RoadNetwork& net, const Query& q, int k);

/// Walk a fixed edge sequence applying the arrival-time function hop by hop.
/// free_flow_cost of the result is the sequence's own free-flow sum unless
/// phi_cost is given (the query's |phi|).
RouteResult evaluate_path_under_elm(const RoadNetwork& net, const LoadSource& loads,
                                    const std::vector<EdgeIndex>& edges, double depart,
                                    std::int64_t query_id = 0, double phi_cost = -1.0);

/// Re-cost each precomputed candidate under the current loads and return the
/// minimum-arrival one; ties go to the lowest free-flow rank. Returns kNoPath
/// when every candidate overflows the horizon.
RouteResult tlat_k(const RoadNetwork& net, const LoadSource& loads, const Query& q,
                   const std::vector<Path>& precomputed);

/// Memoized per-destination free-flow distance tables. get() is thread-safe;
/// warm() precomputes entries so later concurrent reads never miss.
class HeuristicCache {
 public:
  explicit HeuristicCache(const RoadNetwork& net) : net_(net) {}

  std::shared_ptr<const std::vector<double>> get(NodeIndex dest);
  void warm(NodeIndex dest) { (void)get(dest); }

 private:
  const RoadNetwork& net_;
  std::mutex mu_;
  std::unordered_map<NodeIndex, std::shared_ptr<const std::vector<double>>> cache_;
};

/// Memoized Yen candidates per (source, destination).
class KShortestCache {
 public:
  KShortestCache(const RoadNetwork& net, int k) : net_(net), k_(k) {}

  /// Candidates are cached per (s, d); the returned paths are re-annotated
  /// from `depart`.
  std::vector<Path> get(const Query& q);

 private:
  const RoadNetwork& net_;
  int k_;
  std::mutex mu_;
  std::unordered_map<std::uint64_t, std::vector<std::vector<EdgeIndex>>> cache_;
};

}  // namespace tlan
