#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tlan/network.hpp"
#include "tlan/routing.hpp"
#include "tlan/types.hpp"

namespace tlan {

struct QueryRecord {
  Query query;
  bool reachable = false;
  double phi_cost = kInfCost;          // |phi|, interval units
  std::vector<EdgeIndex> phi_edges;    // free-flow optimal edge sequence
};

/// Query workload, sorted ascending by (depart, id), ids unique.
class QuerySet {
 public:
  void add(Query q);
  void sort_and_validate(const RoadNetwork& net);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const QueryRecord& operator[](std::size_t i) const { return records_[i]; }
  QueryRecord& at(std::size_t i) { return records_[i]; }
  const std::vector<QueryRecord>& records() const { return records_; }

  double free_flow_arrival(std::size_t i) const {
    return records_[i].query.depart + records_[i].phi_cost;
  }

  /// Time-annotated free-flow path of query i at its own departure.
  Path phi_path(const RoadNetwork& net, std::size_t i) const;

 private:
  std::vector<QueryRecord> records_;
};

struct GeneratorParams {
  std::size_t count = 1;
  double window_start_s = 0.0;
  double window_end_s = 0.0;
  double hotspot_bias = 0.0;  // fraction of queries whose destination is drawn from the hotspot set
  std::uint64_t seed = 0;
};

/// Synthetic demand: endpoints uniform over nodes, with hotspot_bias of the
/// destinations drawn from a central node set (~5% of nodes nearest the
/// coordinate centroid); departures uniform over the window. Deterministic
/// per seed.
QuerySet generate_queries(const RoadNetwork& net, const GeneratorParams& params);

/// Central node set used by the generator, exposed for tests.
std::vector<NodeIndex> hotspot_nodes(const RoadNetwork& net);

/// Annotate every query with its free-flow optimum via dijkstra_free_flow;
/// unreachable queries are flagged (and excluded from batching downstream).
/// Idempotent.
void precompute_free_flow(const RoadNetwork& net, QuerySet& qs);

}  // namespace tlan
