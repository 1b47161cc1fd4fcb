#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tlan/collective.hpp"
#include "tlan/elm.hpp"
#include "tlan/network.hpp"
#include "tlan/routing.hpp"
#include "tlan/workload.hpp"

namespace tlan {

struct ReplayInput {
  std::int64_t query_id = 0;
  std::size_t query_index = 0;
  std::vector<EdgeIndex> edges;
  double depart = 0.0;
  double phi_cost = 0.0;      // |phi| for the penalty
  double plan_seconds = 0.0;  // per-query algorithm runtime
};

struct ReplayedQuery {
  std::int64_t query_id = 0;
  Path actual;
  double penalty = 0.0;  // interval units
  double plan_seconds = 0.0;
};

struct ReplayResult {
  std::vector<ReplayedQuery> completed;
  EdgeLoadMatrix elm;  // ground-truth loads of completed vehicles
  std::size_t overflowed = 0;
  std::size_t failed_plan = 0;
};

/// Ground-truth evaluation of fixed routes: event-driven chronological
/// replay. Repeatedly processes the vehicle with the earliest next edge-entry
/// time (ties by query id), computes its exit against the loads accumulated
/// so far (plus background), and records its occupancy. Vehicles that would
/// exceed the horizon are dropped and counted.
ReplayResult replay_assignment(const RoadNetwork& net, const std::vector<ReplayInput>& inputs,
                               const LoadSource* background = nullptr);

struct MetricsReport {
  bool empty = true;
  std::size_t queries = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;      // planner failures (no path / overflow)
  std::size_t overflowed = 0;  // dropped during replay
  double ajt_minutes = 0.0;
  double ffcu = 0.0;
  double ld = 0.0;
  double penalty_mean_minutes = 0.0;
  double penalty_std_minutes = 0.0;
  std::vector<std::int64_t> penalty_histogram_1min;
  double end_to_end_avg_minutes = 0.0;
};

/// AJT (mean journey duration, minutes), free-flow capacity utilization
/// FFCU = (1/ET) sum min(l/F, 1), load distribution LD = (1/ET) sum [l > 0],
/// penalty statistics over 1-minute bins, and the mean end-to-end time
/// (per-query runtime plus journey time).
MetricsReport compute_metrics(const ReplayResult& result, const RoadNetwork& net,
                              std::size_t total_queries);

enum class Algorithm { kFfnd, kSlad, kTlatK, kTlaaStar, kCsMat };

std::optional<Algorithm> algorithm_from_name(const std::string& name);
const char* algorithm_name(Algorithm a);

enum class PredictorKind { kZero, kTable };

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kTlaaStar;
  int k = 5;
  double window_y_s = 14400.0;
  std::size_t max_candidates = 0;
  int workers = 1;
  PredictorKind predictor = PredictorKind::kTable;
  double gamma = 1.0;  // control factor; 1.0 == no background
  const EdgeLoadMatrix* base_elm = nullptr;
  std::uint64_t seed = 0;
};

struct ExperimentResult {
  std::vector<PlanRecord> plans;     // one per query
  ReplayResult replay;
  MetricsReport metrics;
  double plan_wall_seconds = 0.0;
  double replay_wall_seconds = 0.0;
};

/// Plan the whole query set with the named algorithm (chronological order for
/// everything except the collective scheduler), replay under true loads, and
/// compute metrics. Deterministic per seed and worker count.
ExperimentResult run_experiment(const RoadNetwork& net, const QuerySet& qs,
                                const ExperimentConfig& cfg);

}  // namespace tlan
