#pragma once

// Shared test-side machinery: fixtures, deterministic instance generators,
// and an independent evaluation oracle. The oracle reimplements the
// arrival-time semantics on its own (exp/log instead of pow, its own floor
// and occupancy handling) so library results are checked against a separate
// code path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "tlan/collective.hpp"
#include "tlan/elm.hpp"
#include "tlan/network.hpp"
#include "tlan/routing.hpp"

namespace fixtures {

inline tlan::NetworkConfig basic_cfg(double interval_s = 360.0, double headway_s = 3.0,
                                     double factor = 0.5, int horizon = 64) {
  tlan::NetworkConfig cfg;
  cfg.interval_length_s = interval_s;
  cfg.base_headway_s = headway_s;
  cfg.transition_penalty_factor = factor;
  cfg.horizon_intervals = horizon;
  return cfg;
}

// Six-intersection instance with three competing routes 1-2-3-4 (cost 1.2),
// 1-5-3-4 and 1-2-6-4 (cost 2.2 each); every edge has explicit capacity 4.
// Speeds are 10 m/s, so lengths encode traversal times directly
// (0.4 intervals = 1440 m at I = 360 s); the transition factor is zero.
inline tlan::RoadNetwork fig1_network(int horizon = 64) {
  tlan::NetworkConfig cfg = basic_cfg(360.0, 3.0, 0.0, horizon);
  tlan::RoadNetwork net;
  for (int i = 1; i <= 6; ++i) net.add_node(i);
  auto len = [](double intervals) { return intervals * 10.0 * 360.0; };
  net.add_edge(1, 1, 2, len(0.4), 10.0, 4.0);
  net.add_edge(2, 2, 3, len(0.4), 10.0, 4.0);
  net.add_edge(3, 3, 4, len(0.4), 10.0, 4.0);
  net.add_edge(4, 1, 5, len(0.4), 10.0, 4.0);
  net.add_edge(5, 5, 3, len(1.4), 10.0, 4.0);
  net.add_edge(6, 2, 6, len(0.4), 10.0, 4.0);
  net.add_edge(7, 6, 4, len(1.4), 10.0, 4.0);
  net.add_edge(8, 5, 2, len(2.0), 10.0, 4.0);
  net.finalize(cfg);
  return net;
}

// The three fig-1 routes as edge-index sequences (edge ids are 1-based in
// the fixture and indices follow (src, dst) order after finalize).
inline std::vector<std::vector<tlan::EdgeIndex>> fig1_routes(const tlan::RoadNetwork& net) {
  auto e = [&](std::int64_t id) { return *net.find_edge(id); };
  return {{e(1), e(2), e(3)}, {e(4), e(5), e(3)}, {e(1), e(6), e(7)}};
}

// Random small instance for oracle comparisons: up to max_nodes nodes,
// up to max_edges directed edges, integer capacities in [2, 6], loads in
// [0, capacity + 20].
struct RandomInstance {
  tlan::RoadNetwork net;
  tlan::EdgeLoadMatrix elm;
};

inline RandomInstance random_instance(std::uint64_t seed, int max_nodes = 8, int max_edges = 14,
                                      int horizon = 64) {
  std::mt19937_64 rng(seed);
  const int n = 4 + static_cast<int>(rng() % (max_nodes - 3));
  tlan::NetworkConfig cfg = basic_cfg(360.0, 3.0, 0.0, horizon);
  tlan::RoadNetwork net;
  for (int i = 0; i < n; ++i) net.add_node(i);

  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b) pairs.emplace_back(a, b);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const int m = std::min<int>(static_cast<int>(pairs.size()),
                              n + static_cast<int>(rng() % (max_edges - n + 1)));
  for (int e = 0; e < m; ++e) {
    // traversal times in (0.05, 1.5] intervals, speed 10 m/s
    const double upsilon = 0.05 + 0.05 * static_cast<double>(1 + rng() % 29);
    const double capacity = static_cast<double>(2 + rng() % 5);
    net.add_edge(e, pairs[e].first, pairs[e].second, upsilon * 3600.0, 10.0, capacity);
  }
  net.finalize(cfg);

  tlan::EdgeLoadMatrix elm(horizon);
  for (tlan::EdgeIndex e = 0; e < net.edge_count(); ++e) {
    const int cap = static_cast<int>(net.edge(e).attrs.free_flow_capacity);
    for (tlan::Interval tau = 0; tau < 10; ++tau)
      if (rng() % 2) elm.set_load(e, tau, static_cast<int>(rng() % (cap + 21)));
  }
  return {std::move(net), std::move(elm)};
}

}  // namespace fixtures

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Independent arrival-time evaluation (exp/log rather than pow).
inline double arrival(const tlan::LoadSource& loads, const tlan::RoadNetwork& net,
                      tlan::EdgeIndex e, double t, int extra_load = 0) {
  const tlan::EdgeAttrs& a = net.edge(e).attrs;
  double tau = std::floor(t + 1e-9);
  double x = t - tau;
  if (x < 0.0) x = 0.0;
  const double l =
      static_cast<double>(loads.load(e, static_cast<tlan::Interval>(tau)) + extra_load);
  double eps = 1.0;
  if (l > a.free_flow_capacity) {
    eps = 1.0 / (l - a.free_flow_capacity);
    if (eps > 1.0) eps = 1.0;
  }
  double delay;
  if (eps == 1.0 || x == 0.0)
    delay = x;
  else
    delay = std::exp(eps * std::log(x));
  return tau + delay + a.min_travel_time;
}

// Evaluate a fixed edge sequence hop by hop; kInf on horizon overflow.
inline double eval_sequence(const tlan::LoadSource& loads, const tlan::RoadNetwork& net,
                            const std::vector<tlan::EdgeIndex>& edges, double depart) {
  double t = depart;
  for (tlan::EdgeIndex e : edges) {
    t = arrival(loads, net, e, t);
    if (t >= net.config().horizon_intervals) return kInf;
  }
  return t;
}

// Exhaustive minimum arrival over all simple paths (DFS), or kInf.
inline double best_simple_path_arrival(const tlan::LoadSource& loads,
                                       const tlan::RoadNetwork& net, const tlan::Query& q) {
  double best = kInf;
  std::vector<char> visited(net.node_count(), 0);
  std::function<void(tlan::NodeIndex, double)> dfs = [&](tlan::NodeIndex u, double t) {
    if (u == q.destination) {
      best = std::min(best, t);
      return;
    }
    visited[u] = 1;
    for (const tlan::OutEdge& oe : net.out_edges(u)) {
      if (visited[oe.neighbor]) continue;
      const double a = arrival(loads, net, oe.edge, t);
      if (a < net.config().horizon_intervals) dfs(oe.neighbor, a);
    }
    visited[u] = 0;
  };
  dfs(q.source, q.depart);
  return best;
}

// All simple paths with their free-flow costs, sorted by (cost, node walk);
// the exhaustive counterpart of the k-shortest search.
struct FreeFlowPath {
  double cost;
  std::vector<tlan::NodeIndex> nodes;
  std::vector<tlan::EdgeIndex> edges;
};

inline std::vector<FreeFlowPath> all_free_flow_paths(const tlan::RoadNetwork& net,
                                                     tlan::NodeIndex s, tlan::NodeIndex d) {
  std::vector<FreeFlowPath> out;
  std::vector<char> visited(net.node_count(), 0);
  std::vector<tlan::NodeIndex> nodes{s};
  std::vector<tlan::EdgeIndex> edges;
  std::function<void(tlan::NodeIndex, double)> dfs = [&](tlan::NodeIndex u, double cost) {
    if (u == d) {
      out.push_back({cost, nodes, edges});
      return;
    }
    visited[u] = 1;
    for (const tlan::OutEdge& oe : net.out_edges(u)) {
      if (visited[oe.neighbor]) continue;
      nodes.push_back(oe.neighbor);
      edges.push_back(oe.edge);
      dfs(oe.neighbor, cost + net.edge(oe.edge).attrs.min_travel_time);
      nodes.pop_back();
      edges.pop_back();
    }
    visited[u] = 0;
  };
  dfs(s, 0.0);
  std::sort(out.begin(), out.end(), [](const FreeFlowPath& a, const FreeFlowPath& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.nodes < b.nodes;
  });
  return out;
}

// Independent event-driven ground-truth replay: linear scan for the earliest
// (time, id) instead of a heap. Returns per-vehicle arrivals (kInf when
// dropped at the horizon).
struct ReplayVehicle {
  std::int64_t id;
  std::vector<tlan::EdgeIndex> edges;
  double depart;
};

inline std::vector<double> replay(const tlan::RoadNetwork& net,
                                  std::vector<ReplayVehicle> vehicles,
                                  const tlan::LoadSource* background = nullptr) {
  const double horizon = net.config().horizon_intervals;
  tlan::EdgeLoadMatrix elm(net.config().horizon_intervals);
  tlan::CombinedLoad view(elm, background);
  std::vector<double> time(vehicles.size());
  std::vector<std::size_t> hop(vehicles.size(), 0);
  std::vector<double> result(vehicles.size(), kInf);
  std::vector<char> active(vehicles.size(), 1);
  for (std::size_t i = 0; i < vehicles.size(); ++i) time[i] = vehicles[i].depart;

  while (true) {
    std::size_t pick = vehicles.size();
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      if (!active[i]) continue;
      if (pick == vehicles.size() || time[i] < time[pick] ||
          (time[i] == time[pick] && vehicles[i].id < vehicles[pick].id))
        pick = i;
    }
    if (pick == vehicles.size()) break;
    const tlan::EdgeIndex e = vehicles[pick].edges[hop[pick]];
    const double exit = arrival(view, net, e, time[pick]);
    if (exit >= horizon) {
      active[pick] = 0;
      continue;
    }
    const auto first = static_cast<tlan::Interval>(std::floor(time[pick] + 1e-9));
    const auto last = static_cast<tlan::Interval>(std::floor(exit + 1e-9));
    for (tlan::Interval tau = first; tau <= last; ++tau) elm.add(e, tau, +1);
    time[pick] = exit;
    if (++hop[pick] == vehicles[pick].edges.size()) {
      result[pick] = exit;
      active[pick] = 0;
    }
  }
  return result;
}

// Reference collective scheduler without the intersection-based refresh:
// every remaining candidate is recomputed from scratch after each
// assignment. Shares batch forming, candidate definition, and selection with
// the library so the differential test isolates the refresh logic.
inline std::vector<tlan::PlanRecord> naive_cs_mat(const tlan::RoadNetwork& net,
                                                  const tlan::QuerySet& qs,
                                                  const tlan::BatchConfig& cfg,
                                                  const tlan::PenaltyPredictor& predictor,
                                                  const tlan::LoadSource* background = nullptr) {
  using namespace tlan;
  constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  EdgeLoadMatrix elm(net.config().horizon_intervals);
  CombinedLoad composite(elm, background);
  HeuristicCache heuristics(net);
  const double window_y = net.config().span_seconds_to_intervals(cfg.window_y_s);
  const double horizon = net.config().horizon_intervals;

  const std::size_t n = qs.size();
  std::vector<bool> assigned(n, false);
  std::vector<PlanRecord> records;
  auto record = [&](std::size_t i, RouteStatus st, Path p = {}) {
    records.push_back({qs[i].query.id, i, st, std::move(p)});
    assigned[i] = true;
  };
  for (std::size_t i = 0; i < n; ++i)
    if (!qs[i].reachable) record(i, RouteStatus::kNoPath);

  std::size_t cursor = 0;
  while (true) {
    while (cursor < n && assigned[cursor]) ++cursor;
    if (cursor == n) break;
    std::vector<std::size_t> batch = form_batch(qs, assigned, cursor, window_y);
    std::size_t head = 0;
    auto batch_front = [&]() -> std::size_t {
      while (head < batch.size() && assigned[batch[head]]) ++head;
      return head < batch.size() ? batch[head] : npos;
    };
    bool recheck = false;
    std::size_t base = npos;
    std::vector<std::size_t> cand;
    while (true) {
      if (!recheck) base = batch_front();
      if (base == npos) break;
      const Path phi = qs.phi_path(net, base);
      if (phi.total_arrival >= horizon) {
        record(base, RouteStatus::kHorizonOverflow);
        recheck = false;
        continue;
      }
      if (!is_free_flow_path_congested(composite, net, phi)) {
        add_path_load(elm, phi);
        record(base, RouteStatus::kOk, phi);
        recheck = false;
        continue;
      }
      if (!recheck) {
        std::vector<std::size_t> alive;
        for (std::size_t i = head; i < batch.size(); ++i)
          if (!assigned[batch[i]]) alive.push_back(batch[i]);
        cand = define_candidate_set(qs, alive, base, predictor, cfg.max_candidates);
      }

      std::vector<RouteResult> fresh;
      std::vector<EvaluatedCandidate> pool;
      fresh.reserve(cand.size());
      for (std::size_t idx : cand) {
        if (assigned[idx]) continue;
        auto h = heuristics.get(qs[idx].query.destination);
        fresh.push_back(tlaa_star(net, composite, qs[idx].query, *h));
        pool.push_back({idx, nullptr});
      }
      for (std::size_t i = 0; i < pool.size(); ++i) pool[i].result = &fresh[i];
      const std::size_t pick = select_minimal_arrival(qs, pool);
      if (pick == npos) {
        RouteStatus st = RouteStatus::kNoPath;
        for (std::size_t i = 0; i < pool.size(); ++i)
          if (pool[i].query_index == base) st = pool[i].result->status;
        record(base, st);
        recheck = false;
        continue;
      }
      const std::size_t chosen = pool[pick].query_index;
      Path p = pool[pick].result->path;
      add_path_load(elm, p);
      record(chosen, RouteStatus::kOk, std::move(p));
      recheck = chosen != base;
    }
  }
  return records;
}

}  // namespace oracle
