#include "tlan/workload.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace tlan {

void QuerySet::add(Query q) {
  QueryRecord rec;
  rec.query = q;
  records_.push_back(std::move(rec));
}

void QuerySet::sort_and_validate(const RoadNetwork& net) {
  const double horizon = static_cast<double>(net.config().horizon_intervals);
  std::unordered_set<std::int64_t> ids;
  for (const QueryRecord& r : records_) {
    if (r.query.source == r.query.destination)
      throw ValidationError("query " + std::to_string(r.query.id) +
                            ": source equals destination");
    if (r.query.source >= net.node_count() || r.query.destination >= net.node_count())
      throw ValidationError("query " + std::to_string(r.query.id) + ": unknown endpoint");
    if (r.query.depart < 0.0 || r.query.depart >= horizon)
      throw ValidationError("query " + std::to_string(r.query.id) +
                            ": departure outside horizon");
    if (!ids.insert(r.query.id).second)
      throw ValidationError("duplicate query id " + std::to_string(r.query.id));
  }
  std::sort(records_.begin(), records_.end(), [](const QueryRecord& a, const QueryRecord& b) {
    return std::tie(a.query.depart, a.query.id) < std::tie(b.query.depart, b.query.id);
  });
}

Path QuerySet::phi_path(const RoadNetwork& net, std::size_t i) const {
  const QueryRecord& rec = records_[i];
  Path p;
  p.query_id = rec.query.id;
  double t = rec.query.depart;
  p.hops.reserve(rec.phi_edges.size());
  for (EdgeIndex e : rec.phi_edges) {
    const double exit = t + net.edge(e).attrs.min_travel_time;
    p.hops.push_back({e, t, exit});
    t = exit;
  }
  p.total_arrival = t;
  p.free_flow_cost = t - rec.query.depart;
  return p;
}

std::vector<NodeIndex> hotspot_nodes(const RoadNetwork& net) {
  const std::size_t n = net.node_count();
  const std::size_t want = std::max<std::size_t>(1, (n + 19) / 20);

  // centroid distance when coordinates exist, node-index distance otherwise
  double cx = 0.0, cy = 0.0;
  bool have_xy = true;
  for (NodeIndex v = 0; v < n; ++v) {
    auto xy = net.node_xy(v);
    if (!xy) {
      have_xy = false;
      break;
    }
    cx += (*xy)[0];
    cy += (*xy)[1];
  }
  std::vector<std::pair<double, NodeIndex>> ranked;
  ranked.reserve(n);
  if (have_xy && n > 0) {
    cx /= static_cast<double>(n);
    cy /= static_cast<double>(n);
    for (NodeIndex v = 0; v < n; ++v) {
      auto xy = *net.node_xy(v);
      ranked.emplace_back(std::hypot(xy[0] - cx, xy[1] - cy), v);
    }
  } else {
    const double mid = static_cast<double>(n - 1) / 2.0;
    for (NodeIndex v = 0; v < n; ++v)
      ranked.emplace_back(std::abs(static_cast<double>(v) - mid), v);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<NodeIndex> out;
  out.reserve(want);
  for (std::size_t i = 0; i < want && i < ranked.size(); ++i) out.push_back(ranked[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

double unit_real(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

}  // namespace

QuerySet generate_queries(const RoadNetwork& net, const GeneratorParams& params) {
  if (params.count < 1) throw ValidationError("query count must be >= 1");
  const NetworkConfig& cfg = net.config();
  const double w0 = cfg.seconds_to_intervals(params.window_start_s);
  const double w1 = cfg.seconds_to_intervals(params.window_end_s);
  if (w0 < 0.0 || w1 < w0 || w1 >= cfg.horizon_intervals)
    throw ValidationError("query window outside horizon");
  if (params.hotspot_bias < 0.0 || params.hotspot_bias > 1.0)
    throw ValidationError("hotspot_bias must lie in [0, 1]");

  const std::vector<NodeIndex> hub = hotspot_nodes(net);
  std::mt19937_64 rng(params.seed);
  QuerySet qs;
  const std::size_t n_nodes = net.node_count();
  for (std::size_t i = 0; i < params.count; ++i) {
    Query q;
    q.id = static_cast<std::int64_t>(i);
    q.depart = w0 + (w1 - w0) * unit_real(rng);
    do {
      q.source = static_cast<NodeIndex>(bounded(rng, n_nodes));
      const bool to_hub = params.hotspot_bias > 0.0 && unit_real(rng) < params.hotspot_bias;
      q.destination = to_hub ? hub[bounded(rng, hub.size())]
                             : static_cast<NodeIndex>(bounded(rng, n_nodes));
    } while (q.source == q.destination);
    qs.add(q);
  }
  qs.sort_and_validate(net);
  return qs;
}

void precompute_free_flow(const RoadNetwork& net, QuerySet& qs) {
  // memoized per (source, destination); repeated pairs are common in
  // hotspot workloads
  std::unordered_map<std::uint64_t, std::pair<double, std::vector<EdgeIndex>>> memo;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    QueryRecord& rec = qs.at(i);
    const std::uint64_t key = (static_cast<std::uint64_t>(rec.query.source) << 32) |
                              static_cast<std::uint64_t>(rec.query.destination);
    auto it = memo.find(key);
    if (it == memo.end()) {
      RouteResult rr = dijkstra_free_flow(net, rec.query);
      if (rr.ok())
        it = memo.emplace(key, std::make_pair(rr.path.free_flow_cost,
                                              rr.path.edge_sequence()))
                 .first;
      else
        it = memo.emplace(key, std::make_pair(kInfCost, std::vector<EdgeIndex>{})).first;
    }
    rec.reachable = it->second.first != kInfCost;
    rec.phi_cost = it->second.first;
    rec.phi_edges = it->second.second;
  }
}

}  // namespace tlan
