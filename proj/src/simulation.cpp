#include "tlan/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

#include "tlan/parallel.hpp"

namespace tlan {

namespace {

struct Event {
  double time;
  std::int64_t query_id;
  std::size_t input_index;
  std::size_t hop;

  bool operator>(const Event& o) const {
    return std::tie(time, query_id) > std::tie(o.time, o.query_id);
  }
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

ReplayResult replay_assignment(const RoadNetwork& net, const std::vector<ReplayInput>& inputs,
                               const LoadSource* background) {
  ReplayResult res;
  res.elm = EdgeLoadMatrix(net.config().horizon_intervals);
  CombinedLoad view(res.elm, background);
  const double horizon = static_cast<double>(net.config().horizon_intervals);

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::vector<std::vector<Hop>> walked(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].edges.empty()) continue;
    walked[i].reserve(inputs[i].edges.size());
    events.push({inputs[i].depart, inputs[i].query_id, i, 0});
  }

  while (!events.empty()) {
    const Event ev = events.top();
    events.pop();
    const ReplayInput& in = inputs[ev.input_index];
    const EdgeIndex e = in.edges[ev.hop];
    const EdgeRecord& rec = net.edge(e);
    const double exit = arrival_time(view, {e, ev.time, false}, rec.attrs);
    if (exit >= horizon) {
      // vehicle dropped; occupancy of already-driven hops stays in place
      ++res.overflowed;
      continue;
    }
    const Interval first = interval_of(ev.time);
    const Interval last = interval_of(exit);
    for (Interval tau = first; tau <= last; ++tau) res.elm.add(e, tau, +1);
    walked[ev.input_index].push_back({e, ev.time, exit});

    if (ev.hop + 1 < in.edges.size()) {
      events.push({exit, ev.query_id, ev.input_index, ev.hop + 1});
    } else {
      ReplayedQuery done;
      done.query_id = in.query_id;
      done.plan_seconds = in.plan_seconds;
      done.actual.query_id = in.query_id;
      done.actual.hops = std::move(walked[ev.input_index]);
      done.actual.total_arrival = exit;
      done.actual.free_flow_cost = in.phi_cost;
      done.penalty = (exit - in.depart) - in.phi_cost;
      res.completed.push_back(std::move(done));
    }
  }
  std::sort(res.completed.begin(), res.completed.end(),
            [](const ReplayedQuery& a, const ReplayedQuery& b) { return a.query_id < b.query_id; });
  return res;
}

MetricsReport compute_metrics(const ReplayResult& result, const RoadNetwork& net,
                              std::size_t total_queries) {
  MetricsReport m;
  m.queries = total_queries;
  m.completed = result.completed.size();
  m.overflowed = result.overflowed;
  m.failed = total_queries - m.completed - m.overflowed;

  const double cells = static_cast<double>(net.edge_count()) *
                       static_cast<double>(net.config().horizon_intervals);
  double sigma_sum = 0.0;
  std::size_t nonzero = 0;
  for (const auto& [e, tau, l] : result.elm.sorted_cells()) {
    if (l <= 0) continue;
    const double cap = net.edge(e).attrs.free_flow_capacity;
    sigma_sum += std::min(static_cast<double>(l) / cap, 1.0);
    ++nonzero;
  }
  m.ffcu = cells > 0.0 ? sigma_sum / cells : 0.0;
  m.ld = cells > 0.0 ? static_cast<double>(nonzero) / cells : 0.0;

  if (result.completed.empty()) {
    m.empty = true;
    return m;
  }
  m.empty = false;

  const double minutes_per_interval = net.config().interval_length_s / 60.0;
  double dur_sum = 0.0, pen_sum = 0.0, e2e_sum = 0.0;
  std::vector<double> pens;
  pens.reserve(result.completed.size());
  for (const ReplayedQuery& r : result.completed) {
    const double dur_min = r.actual.duration() * minutes_per_interval;
    const double pen_min = r.penalty * minutes_per_interval;
    dur_sum += dur_min;
    pen_sum += pen_min;
    e2e_sum += dur_min + r.plan_seconds / 60.0;
    pens.push_back(pen_min);
  }
  const double n = static_cast<double>(pens.size());
  m.ajt_minutes = dur_sum / n;
  m.penalty_mean_minutes = pen_sum / n;
  double var = 0.0;
  for (double p : pens) var += (p - m.penalty_mean_minutes) * (p - m.penalty_mean_minutes);
  m.penalty_std_minutes = std::sqrt(var / n);
  m.end_to_end_avg_minutes = e2e_sum / n;

  std::size_t max_bin = 0;
  for (double p : pens) max_bin = std::max(max_bin, static_cast<std::size_t>(std::max(0.0, p)));
  m.penalty_histogram_1min.assign(max_bin + 1, 0);
  for (double p : pens)
    ++m.penalty_histogram_1min[static_cast<std::size_t>(std::max(0.0, p))];
  return m;
}

std::optional<Algorithm> algorithm_from_name(const std::string& name) {
  if (name == "ffnd") return Algorithm::kFfnd;
  if (name == "slad") return Algorithm::kSlad;
  if (name == "tlatk") return Algorithm::kTlatK;
  if (name == "tlaa") return Algorithm::kTlaaStar;
  if (name == "csmat") return Algorithm::kCsMat;
  return std::nullopt;
}

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kFfnd:
      return "ffnd";
    case Algorithm::kSlad:
      return "slad";
    case Algorithm::kTlatK:
      return "tlatk";
    case Algorithm::kTlaaStar:
      return "tlaa";
    case Algorithm::kCsMat:
      return "csmat";
  }
  return "unknown";
}

namespace {

// Chronological single-query planning shared by the non-collective
// algorithms. Each assigned path's load is added to the planner ELM before
// the next query is processed (FFND keeps no ELM at all).
std::vector<PlanRecord> plan_chronological(const RoadNetwork& net, const QuerySet& qs,
                                           Algorithm alg, const ExperimentConfig& cfg,
                                           HeuristicCache& heuristics,
                                           const LoadSource* background,
                                           std::vector<double>& plan_seconds) {
  EdgeLoadMatrix elm(net.config().horizon_intervals);
  CombinedLoad composite(elm, background);
  KShortestCache kcache(net, cfg.k);
  std::vector<PlanRecord> plans;
  plans.reserve(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const QueryRecord& rec = qs[i];
    if (!rec.reachable) {
      plans.push_back({rec.query.id, i, RouteStatus::kNoPath, {}});
      continue;
    }
    const double t0 = now_seconds();
    RouteResult rr;
    switch (alg) {
      case Algorithm::kFfnd:
        rr = dijkstra_free_flow(net, rec.query);
        break;
      case Algorithm::kSlad:
        rr = slad(net, composite, rec.query, *heuristics.get(rec.query.destination));
        break;
      case Algorithm::kTlaaStar:
        rr = tlaa_star(net, composite, rec.query, *heuristics.get(rec.query.destination));
        break;
      case Algorithm::kTlatK:
        rr = tlat_k(net, composite, rec.query, kcache.get(rec.query));
        break;
      case Algorithm::kCsMat:
        throw ValidationError("collective algorithm is not chronological");
    }
    plan_seconds[i] = now_seconds() - t0;
    if (rr.ok() && alg != Algorithm::kFfnd) add_path_load(elm, rr.path);
    plans.push_back({rec.query.id, i, rr.status, std::move(rr.path)});
  }
  return plans;
}

}  // namespace

ExperimentResult run_experiment(const RoadNetwork& net, const QuerySet& qs,
                                const ExperimentConfig& cfg) {
  ExperimentResult out;
  const int workers = cfg.workers > 0 ? cfg.workers : default_worker_count();

  EdgeLoadMatrix background_storage;
  const LoadSource* background = nullptr;
  if (cfg.base_elm && cfg.gamma < 1.0) {
    background_storage = apply_control_factor(*cfg.base_elm, cfg.gamma);
    background = &background_storage;
  }

  HeuristicCache heuristics(net);
  std::vector<double> plan_seconds(qs.size(), 0.0);
  const double plan_t0 = now_seconds();

  if (cfg.algorithm == Algorithm::kCsMat) {
    std::unique_ptr<PenaltyPredictor> predictor;
    if (cfg.predictor == PredictorKind::kTable) {
      // warm-up: chronological TLAA* pass whose penalties train the table
      std::vector<double> warm_seconds(qs.size(), 0.0);
      std::vector<PlanRecord> warm = plan_chronological(net, qs, Algorithm::kTlaaStar, cfg,
                                                        heuristics, background, warm_seconds);
      std::vector<std::pair<Query, double>> training;
      training.reserve(warm.size());
      for (const PlanRecord& r : warm)
        if (r.status == RouteStatus::kOk) {
          const QueryRecord& rec = qs[r.query_index];
          training.emplace_back(rec.query,
                                r.path.total_arrival - rec.query.depart - rec.phi_cost);
        }
      predictor = std::make_unique<TablePredictor>(training);
    } else {
      predictor = std::make_unique<ZeroPredictor>();
    }
    BatchConfig bc;
    bc.window_y_s = cfg.window_y_s;
    bc.max_candidates = cfg.max_candidates;
    bc.parallelism = workers;
    CollectiveResult cres = cs_mat(net, qs, bc, *predictor, heuristics, background);
    out.plans = std::move(cres.records);
    const double per_query = qs.empty() ? 0.0 : (now_seconds() - plan_t0) / qs.size();
    std::fill(plan_seconds.begin(), plan_seconds.end(), per_query);
  } else {
    out.plans = plan_chronological(net, qs, cfg.algorithm, cfg, heuristics, background,
                                   plan_seconds);
  }
  out.plan_wall_seconds = now_seconds() - plan_t0;

  std::vector<ReplayInput> inputs;
  inputs.reserve(out.plans.size());
  for (const PlanRecord& r : out.plans) {
    if (r.status != RouteStatus::kOk) continue;
    ReplayInput in;
    in.query_id = r.query_id;
    in.query_index = r.query_index;
    in.edges = r.path.edge_sequence();
    in.depart = qs[r.query_index].query.depart;
    in.phi_cost = qs[r.query_index].phi_cost;
    in.plan_seconds = plan_seconds[r.query_index];
    inputs.push_back(std::move(in));
  }
  std::sort(inputs.begin(), inputs.end(),
            [](const ReplayInput& a, const ReplayInput& b) { return a.query_id < b.query_id; });

  const double replay_t0 = now_seconds();
  out.replay = replay_assignment(net, inputs, background);
  out.replay_wall_seconds = now_seconds() - replay_t0;
  out.replay.failed_plan = out.plans.size() - inputs.size();
  out.metrics = compute_metrics(out.replay, net, qs.size());
  return out;
}

}  // namespace tlan
