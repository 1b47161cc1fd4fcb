#include "tlan/routing.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <tuple>
#include <unordered_set>

namespace tlan {

namespace {

struct Label {
  double cost = kInfCost;
  NodeIndex pred = kInvalidNode;
  EdgeIndex via = kInvalidEdge;
};

// Relaxation rule shared by all searches: strictly smaller cost wins; an
// exactly equal cost wins only with a lexicographically smaller
// (predecessor, edge) pair, which pins tie-breaking for reproducible runs.
bool improves(double cand, NodeIndex cand_pred, EdgeIndex cand_edge, const Label& cur) {
  if (cand < cur.cost) return true;
  if (cand > cur.cost) return false;
  return std::tie(cand_pred, cand_edge) < std::tie(cur.pred, cur.via);
}

struct HeapEntry {
  double f;
  NodeIndex node;
  bool operator>(const HeapEntry& o) const {
    return std::tie(f, node) > std::tie(o.f, o.node);
  }
};
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

std::vector<EdgeIndex> collect_edges(const std::vector<Label>& labels, NodeIndex src,
                                     NodeIndex dst) {
  std::vector<EdgeIndex> edges;
  for (NodeIndex v = dst; v != src; v = labels[v].pred) edges.push_back(labels[v].via);
  std::reverse(edges.begin(), edges.end());
  return edges;
}

// Free-flow time annotation: forward accumulation of min travel times, the
// same additions the searches perform, so costs reproduce bit-exactly.
Path annotate_free_flow(const RoadNetwork& net, std::int64_t query_id,
                        const std::vector<EdgeIndex>& edges, double depart) {
  Path p;
  p.query_id = query_id;
  double t = depart;
  p.hops.reserve(edges.size());
  for (EdgeIndex e : edges) {
    const double exit = t + net.edge(e).attrs.min_travel_time;
    p.hops.push_back({e, t, exit});
    t = exit;
  }
  p.total_arrival = t;
  p.free_flow_cost = t - depart;
  return p;
}

// Dijkstra over min travel times with optional edge/node bans (Yen spur
// searches). Returns the edge sequence and cost.
std::optional<std::pair<double, std::vector<EdgeIndex>>> dijkstra_filtered(
    const RoadNetwork& net, NodeIndex src, NodeIndex dst,
    const std::unordered_set<EdgeIndex>* banned_edges, const std::vector<char>* banned_nodes) {
  std::vector<Label> labels(net.node_count());
  std::vector<char> settled(net.node_count(), 0);
  MinHeap heap;
  labels[src] = {0.0, src, kInvalidEdge};
  heap.push({0.0, src});
  while (!heap.empty()) {
    const auto [f, u] = heap.top();
    heap.pop();
    if (settled[u]) continue;
    settled[u] = 1;
    if (u == dst) break;
    for (const OutEdge& oe : net.out_edges(u)) {
      if (settled[oe.neighbor]) continue;
      if (banned_edges && banned_edges->count(oe.edge)) continue;
      if (banned_nodes && (*banned_nodes)[oe.neighbor]) continue;
      const double nd = f + net.edge(oe.edge).attrs.min_travel_time;
      if (improves(nd, u, oe.edge, labels[oe.neighbor])) {
        const bool push = nd < labels[oe.neighbor].cost;
        labels[oe.neighbor] = {nd, u, oe.edge};
        if (push) heap.push({nd, oe.neighbor});
      }
    }
  }
  if (!settled[dst]) return std::nullopt;
  return std::make_pair(labels[dst].cost, collect_edges(labels, src, dst));
}

}  // namespace

std::vector<EdgeIndex> Path::edge_sequence() const {
  std::vector<EdgeIndex> out;
  out.reserve(hops.size());
  for (const Hop& h : hops) out.push_back(h.edge);
  return out;
}

const char* to_string(RouteStatus s) {
  switch (s) {
    case RouteStatus::kOk:
      return "ok";
    case RouteStatus::kNoPath:
      return "no_path";
    case RouteStatus::kHorizonOverflow:
      return "horizon_overflow";
  }
  return "unknown";
}

RouteResult dijkstra_free_flow(const RoadNetwork& net, const Query& q) {
  auto best = dijkstra_filtered(net, q.source, q.destination, nullptr, nullptr);
  if (!best) return {RouteStatus::kNoPath, {}};
  return {RouteStatus::kOk, annotate_free_flow(net, q.id, best->second, q.depart)};
}

RouteResult tlaa_star(const RoadNetwork& net, const LoadSource& loads, const Query& q,
                      const std::vector<double>& heuristic) {
  if (heuristic[q.source] == kInfCost) return {RouteStatus::kNoPath, {}};
  const double horizon = static_cast<double>(net.config().horizon_intervals);

  std::vector<Label> labels(net.node_count());
  std::vector<char> settled(net.node_count(), 0);
  MinHeap heap;
  labels[q.source] = {q.depart, q.source, kInvalidEdge};
  heap.push({q.depart + heuristic[q.source], q.source});
  while (!heap.empty()) {
    const NodeIndex u = heap.top().node;
    heap.pop();
    if (settled[u]) continue;
    settled[u] = 1;
    if (u == q.destination) break;
    const double a_u = labels[u].cost;
    for (const OutEdge& oe : net.out_edges(u)) {
      if (settled[oe.neighbor]) continue;
      if (heuristic[oe.neighbor] == kInfCost) continue;  // cannot reach the destination
      const double a_j =
          arrival_time(loads, {oe.edge, a_u, false}, net.edge(oe.edge).attrs);
      if (a_j >= horizon) continue;
      if (improves(a_j, u, oe.edge, labels[oe.neighbor])) {
        const bool push = a_j < labels[oe.neighbor].cost;
        labels[oe.neighbor] = {a_j, u, oe.edge};
        if (push) heap.push({a_j + heuristic[oe.neighbor], oe.neighbor});
      }
    }
  }
  if (!settled[q.destination]) return {RouteStatus::kHorizonOverflow, {}};

  // Re-walk the predecessor chain with the same arrival-time evaluations, so
  // hop times chain exactly and the total reproduces the settled label.
  const std::vector<EdgeIndex> edges = collect_edges(labels, q.source, q.destination);
  Path p;
  p.query_id = q.id;
  double t = q.depart;
  p.hops.reserve(edges.size());
  for (EdgeIndex e : edges) {
    const double a_j = arrival_time(loads, {e, t, false}, net.edge(e).attrs);
    p.hops.push_back({e, t, a_j});
    t = a_j;
  }
  p.total_arrival = t;
  p.free_flow_cost = heuristic[q.source];
  return {RouteStatus::kOk, std::move(p)};
}

RouteResult slad(const RoadNetwork& net, const LoadSource& loads, const Query& q,
                 const std::vector<double>& heuristic) {
  SnapshotView snap(loads, interval_of(q.depart));
  return tlaa_star(net, snap, q, heuristic);
}

namespace {

struct YenCandidate {
  double cost;
  std::vector<NodeIndex> nodes;
  std::vector<EdgeIndex> edges;

  bool operator<(const YenCandidate& o) const {
    return std::tie(cost, nodes) < std::tie(o.cost, o.nodes);
  }
};

std::vector<NodeIndex> node_walk(const RoadNetwork& net, NodeIndex src,
                                 const std::vector<EdgeIndex>& edges) {
  std::vector<NodeIndex> nodes{src};
  for (EdgeIndex e : edges) nodes.push_back(net.edge(e).to);
  return nodes;
}

}  // namespace

std::vector<Path> yen_k_shortest(const RoadNetwork& net, const Query& q, int k) {
  std::vector<Path> out;
  if (k < 1 || q.source == q.destination) return out;

  auto best = dijkstra_filtered(net, q.source, q.destination, nullptr, nullptr);
  if (!best) return out;

  std::vector<YenCandidate> accepted;
  accepted.push_back({best->first, node_walk(net, q.source, best->second), best->second});
  std::set<YenCandidate> candidates;
  std::set<std::vector<NodeIndex>> seen{accepted[0].nodes};

  while (static_cast<int>(accepted.size()) < k) {
    const YenCandidate prev = accepted.back();
    for (std::size_t i = 0; i + 1 < prev.nodes.size(); ++i) {
      const NodeIndex spur = prev.nodes[i];
      const std::vector<NodeIndex> root_nodes(prev.nodes.begin(), prev.nodes.begin() + i + 1);

      std::unordered_set<EdgeIndex> banned_edges;
      for (const YenCandidate& p : accepted)
        if (p.nodes.size() > i &&
            std::equal(root_nodes.begin(), root_nodes.end(), p.nodes.begin()))
          if (p.edges.size() > i) banned_edges.insert(p.edges[i]);

      std::vector<char> banned_nodes(net.node_count(), 0);
      for (std::size_t j = 0; j < i; ++j) banned_nodes[prev.nodes[j]] = 1;

      auto spur_path =
          dijkstra_filtered(net, spur, q.destination, &banned_edges, &banned_nodes);
      if (!spur_path) continue;

      YenCandidate cand;
      cand.edges.assign(prev.edges.begin(), prev.edges.begin() + i);
      cand.edges.insert(cand.edges.end(), spur_path->second.begin(), spur_path->second.end());
      cand.nodes = node_walk(net, q.source, cand.edges);
      if (seen.count(cand.nodes)) continue;
      cand.cost = 0.0;
      for (EdgeIndex e : cand.edges) cand.cost += net.edge(e).attrs.min_travel_time;
      candidates.insert(std::move(cand));
    }
    if (candidates.empty()) break;
    auto it = candidates.begin();
    seen.insert(it->nodes);
    accepted.push_back(*it);
    candidates.erase(it);
  }

  out.reserve(accepted.size());
  for (const YenCandidate& c : accepted)
    out.push_back(annotate_free_flow(net, q.id, c.edges, q.depart));
  return out;
}

RouteResult evaluate_path_under_elm(const RoadNetwork& net, const LoadSource& loads,
                                    const std::vector<EdgeIndex>& edges, double depart,
                                    std::int64_t query_id, double phi_cost) {
  const double horizon = static_cast<double>(net.config().horizon_intervals);
  Path p;
  p.query_id = query_id;
  double t = depart;
  double ff_sum = 0.0;
  NodeIndex at = edges.empty() ? kInvalidNode : net.edge(edges.front()).from;
  p.hops.reserve(edges.size());
  for (EdgeIndex e : edges) {
    const EdgeRecord& rec = net.edge(e);
    if (rec.from != at) throw ValidationError("edge sequence is not connected");
    const double a_j = arrival_time(loads, {e, t, false}, rec.attrs);
    if (a_j >= horizon) return {RouteStatus::kHorizonOverflow, {}};
    p.hops.push_back({e, t, a_j});
    ff_sum += rec.attrs.min_travel_time;
    t = a_j;
    at = rec.to;
  }
  p.total_arrival = t;
  p.free_flow_cost = phi_cost >= 0.0 ? phi_cost : ff_sum;
  return {RouteStatus::kOk, std::move(p)};
}

RouteResult tlat_k(const RoadNetwork& net, const LoadSource& loads, const Query& q,
                   const std::vector<Path>& precomputed) {
  RouteResult best{RouteStatus::kNoPath, {}};
  const double phi_cost = precomputed.empty() ? -1.0 : precomputed.front().free_flow_cost;
  for (const Path& cand : precomputed) {
    RouteResult rr =
        evaluate_path_under_elm(net, loads, cand.edge_sequence(), q.depart, q.id, phi_cost);
    if (!rr.ok()) continue;
    // strict improvement only: ties stay with the lower free-flow rank
    if (!best.ok() || rr.path.total_arrival < best.path.total_arrival) best = std::move(rr);
  }
  return best;
}

std::shared_ptr<const std::vector<double>> HeuristicCache::get(NodeIndex dest) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = cache_.find(dest);
    if (it != cache_.end()) return it->second;
  }
  auto table = std::make_shared<const std::vector<double>>(free_flow_heuristic(net_, dest));
  std::lock_guard<std::mutex> lk(mu_);
  return cache_.try_emplace(dest, std::move(table)).first->second;
}

std::vector<Path> KShortestCache::get(const Query& q) {
  const std::uint64_t key =
      (static_cast<std::uint64_t>(q.source) << 32) | static_cast<std::uint64_t>(q.destination);
  std::vector<std::vector<EdgeIndex>>* entry = nullptr;
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      std::vector<std::vector<EdgeIndex>> seqs;
      for (const Path& p : yen_k_shortest(net_, q, k_)) seqs.push_back(p.edge_sequence());
      it = cache_.emplace(key, std::move(seqs)).first;
    }
    entry = &it->second;
  }
  std::vector<Path> out;
  out.reserve(entry->size());
  for (const auto& seq : *entry) {
    Path p;
    p.query_id = q.id;
    double t = q.depart;
    for (EdgeIndex e : seq) {
      const double exit = t + net_.edge(e).attrs.min_travel_time;
      p.hops.push_back({e, t, exit});
      t = exit;
    }
    p.total_arrival = t;
    p.free_flow_cost = t - q.depart;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace tlan
