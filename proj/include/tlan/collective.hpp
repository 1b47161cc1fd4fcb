#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "tlan/elm.hpp"
#include "tlan/routing.hpp"
#include "tlan/workload.hpp"

namespace tlan {

/// Nonnegative congestion-penalty estimate for a query. Implementations must
/// be pure: predict() mutates no state.
class PenaltyPredictor {
 public:
  virtual ~PenaltyPredictor() = default;
  virtual double predict(const Query& q) const = 0;
};

class ZeroPredictor final : public PenaltyPredictor {
 public:
  double predict(const Query&) const override { return 0.0; }
};

/// Mean penalty of training rows matching (source, destination) exactly,
/// falling back to the global mean, falling back to 0.
class TablePredictor final : public PenaltyPredictor {
 public:
  explicit TablePredictor(const std::vector<std::pair<Query, double>>& training);
  double predict(const Query& q) const override;

 private:
  struct Acc {
    double sum = 0.0;
    std::int64_t n = 0;
  };
  std::unordered_map<std::uint64_t, Acc> by_pair_;
  Acc global_;
};

struct BatchConfig {
  double window_y_s = 14400.0;  // rolling-batch horizon, seconds
  std::size_t max_candidates = 0;  // 0 = unlimited
  int parallelism = 1;
};

/// Inverted index (edge, interval) -> candidate query ids, plus the forward
/// map id -> candidate path. Supports the intersection-based recomputation of
/// the collective scheduler.
class PathEdgeMatrix {
 public:
  void insert(std::int64_t query_id, const Path& p);
  void erase(std::int64_t query_id);
  const Path* find(std::int64_t query_id) const;
  std::size_t size() const { return paths_.size(); }

  /// Candidate ids whose stored path shares at least one (edge, interval)
  /// cell with p; sorted ascending.
  std::vector<std::int64_t> intersecting(const Path& p) const;

 private:
  static std::uint64_t key(EdgeIndex e, Interval tau) {
    return (static_cast<std::uint64_t>(e) << 32) | static_cast<std::uint32_t>(tau);
  }
  std::unordered_map<std::uint64_t, std::vector<std::int64_t>> cells_;
  std::unordered_map<std::int64_t, Path> paths_;
};

/// Candidate ids whose cached path intersects the just-assigned one; exactly
/// these need re-evaluation after the load update (all other cached paths
/// kept both their cost and their optimality, since loads only grow).
std::vector<std::int64_t> refresh_candidate_set(const PathEdgeMatrix& pem,
                                                const Path& assigned);

/// Unassigned queries departing within [current.depart, current.depart + y],
/// as indices into qs, sorted ascending by free-flow arrival (ties by id).
/// Unreachable queries are skipped.
std::vector<std::size_t> form_batch(const QuerySet& qs, const std::vector<bool>& assigned,
                                    std::size_t current, double window_y_intervals);

/// True iff any (edge, spanned interval) cell of the free-flow path carries
/// load >= capacity.
bool is_free_flow_path_congested(const LoadSource& loads, const RoadNetwork& net,
                                 const Path& phi);

/// Candidate set for a congested base query: every batch member whose
/// free-flow arrival is strictly below xi = depart + |phi| + predicted
/// penalty, always including base, capped at max_candidates by earliest
/// free-flow arrival. Returned as indices into qs in batch order.
std::vector<std::size_t> define_candidate_set(const QuerySet& qs,
                                              const std::vector<std::size_t>& batch,
                                              std::size_t base,
                                              const PenaltyPredictor& predictor,
                                              std::size_t max_candidates);

struct EvaluatedCandidate {
  std::size_t query_index = 0;
  const RouteResult* result = nullptr;
};

/// Argmin of total arrival over evaluated candidates; ties by earliest
/// free-flow arrival, then query id. Candidates without a usable path are
/// skipped; returns npos when none qualify.
std::size_t select_minimal_arrival(const QuerySet& qs,
                                   const std::vector<EvaluatedCandidate>& candidates);

struct PlanRecord {
  std::int64_t query_id = 0;
  std::size_t query_index = 0;
  RouteStatus status = RouteStatus::kNoPath;
  Path path;
};

struct CollectiveResult {
  std::vector<PlanRecord> records;  // one per input query, in assignment order
  EdgeLoadMatrix elm;               // loads of all assigned paths
};

/// Collective search for minimal arrival time. Processes rolling batches;
/// within a batch repeatedly assigns the candidate achieving the earliest
/// arrival under the current loads, re-evaluating only candidates whose
/// cached path intersects the previously assigned one. Deterministic for
/// fixed inputs regardless of cfg.parallelism.
CollectiveResult cs_mat(const RoadNetwork& net, const QuerySet& qs, const BatchConfig& cfg,
                        const PenaltyPredictor& predictor, HeuristicCache& heuristics,
                        const LoadSource* background = nullptr);

}  // namespace tlan
