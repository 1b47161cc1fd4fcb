#include "tlan/collective.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>

#include "tlan/parallel.hpp"

namespace tlan {

namespace {
constexpr std::size_t kNpos = std::numeric_limits<std::size_t>::max();

std::uint64_t pair_key(NodeIndex s, NodeIndex d) {
  return (static_cast<std::uint64_t>(s) << 32) | static_cast<std::uint64_t>(d);
}
}  // namespace

TablePredictor::TablePredictor(const std::vector<std::pair<Query, double>>& training) {
  for (const auto& [q, pi] : training) {
    Acc& a = by_pair_[pair_key(q.source, q.destination)];
    a.sum += pi;
    a.n += 1;
    global_.sum += pi;
    global_.n += 1;
  }
}

double TablePredictor::predict(const Query& q) const {
  auto it = by_pair_.find(pair_key(q.source, q.destination));
  const Acc& a = it != by_pair_.end() ? it->second : global_;
  if (a.n == 0) return 0.0;
  return std::max(0.0, a.sum / static_cast<double>(a.n));
}

void PathEdgeMatrix::insert(std::int64_t query_id, const Path& p) {
  erase(query_id);
  for (const Hop& h : p.hops) {
    const Interval first = interval_of(h.entry);
    const Interval last = interval_of(h.exit);
    for (Interval tau = first; tau <= last; ++tau) cells_[key(h.edge, tau)].push_back(query_id);
  }
  paths_.emplace(query_id, p);
}

void PathEdgeMatrix::erase(std::int64_t query_id) {
  auto it = paths_.find(query_id);
  if (it == paths_.end()) return;
  for (const Hop& h : it->second.hops) {
    const Interval first = interval_of(h.entry);
    const Interval last = interval_of(h.exit);
    for (Interval tau = first; tau <= last; ++tau) {
      auto cell = cells_.find(key(h.edge, tau));
      if (cell == cells_.end()) continue;
      std::erase(cell->second, query_id);
      if (cell->second.empty()) cells_.erase(cell);
    }
  }
  paths_.erase(it);
}

const Path* PathEdgeMatrix::find(std::int64_t query_id) const {
  auto it = paths_.find(query_id);
  return it == paths_.end() ? nullptr : &it->second;
}

std::vector<std::int64_t> PathEdgeMatrix::intersecting(const Path& p) const {
  std::vector<std::int64_t> out;
  for (const Hop& h : p.hops) {
    const Interval first = interval_of(h.entry);
    const Interval last = interval_of(h.exit);
    for (Interval tau = first; tau <= last; ++tau) {
      auto cell = cells_.find(key(h.edge, tau));
      if (cell != cells_.end()) out.insert(out.end(), cell->second.begin(), cell->second.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::int64_t> refresh_candidate_set(const PathEdgeMatrix& pem,
                                                const Path& assigned) {
  return pem.intersecting(assigned);
}

std::vector<std::size_t> form_batch(const QuerySet& qs, const std::vector<bool>& assigned,
                                    std::size_t current, double window_y_intervals) {
  const double limit = qs[current].query.depart + window_y_intervals;
  std::vector<std::size_t> out;
  for (std::size_t i = current; i < qs.size(); ++i) {
    if (qs[i].query.depart > limit + kTimeTol) break;  // records sorted by depart
    if (assigned[i] || !qs[i].reachable) continue;
    out.push_back(i);
  }
  std::sort(out.begin(), out.end(), [&qs](std::size_t a, std::size_t b) {
    const double fa = qs.free_flow_arrival(a);
    const double fb = qs.free_flow_arrival(b);
    if (fa != fb) return fa < fb;
    return qs[a].query.id < qs[b].query.id;
  });
  return out;
}

bool is_free_flow_path_congested(const LoadSource& loads, const RoadNetwork& net,
                                 const Path& phi) {
  for (const Hop& h : phi.hops) {
    const double cap = net.edge(h.edge).attrs.free_flow_capacity;
    const Interval first = interval_of(h.entry);
    const Interval last = interval_of(h.exit);
    for (Interval tau = first; tau <= last; ++tau)
      if (static_cast<double>(loads.load(h.edge, tau)) >= cap) return true;
  }
  return false;
}

std::vector<std::size_t> define_candidate_set(const QuerySet& qs,
                                              const std::vector<std::size_t>& batch,
                                              std::size_t base,
                                              const PenaltyPredictor& predictor,
                                              std::size_t max_candidates) {
  const double xi = qs[base].query.depart + qs[base].phi_cost +
                    std::max(0.0, predictor.predict(qs[base].query));
  std::vector<std::size_t> out;
  bool base_in = false;
  for (std::size_t i : batch) {
    if (i == base || qs.free_flow_arrival(i) < xi) {
      out.push_back(i);
      base_in = base_in || i == base;
    }
  }
  if (!base_in) out.push_back(base);
  if (max_candidates > 0 && out.size() > max_candidates) {
    // keep the earliest free-flow arrivals, never dropping the base itself
    const bool base_kept =
        std::find(out.begin(), out.begin() + max_candidates, base) != out.begin() + max_candidates;
    out.resize(max_candidates);
    if (!base_kept) out.back() = base;
  }
  return out;
}

std::size_t select_minimal_arrival(const QuerySet& qs,
                                   const std::vector<EvaluatedCandidate>& candidates) {
  std::size_t best = kNpos;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const EvaluatedCandidate& c = candidates[i];
    if (!c.result || !c.result->ok()) continue;
    if (best == kNpos) {
      best = i;
      continue;
    }
    const EvaluatedCandidate& b = candidates[best];
    const double ca = c.result->path.total_arrival;
    const double ba = b.result->path.total_arrival;
    if (ca != ba) {
      if (ca < ba) best = i;
      continue;
    }
    const double cf = qs.free_flow_arrival(c.query_index);
    const double bf = qs.free_flow_arrival(b.query_index);
    if (cf != bf) {
      if (cf < bf) best = i;
      continue;
    }
    if (qs[c.query_index].query.id < qs[b.query_index].query.id) best = i;
  }
  return best;
}

namespace {

// Batch-scoped candidate cache behind the collective scheduler.
//
// Cached evaluations stay valid while loads along their path are untouched
// (loads only grow within a batch, so an untouched cached path keeps both its
// cost and its optimality). Every assignment stamps the cells it loads; a
// cached path is refreshed when, and only when, it reaches the top of the
// selection heap carrying a cell stamped after its evaluation — the same
// candidates a full path-matrix intersection would refresh, found lazily.
class CandidateCache {
 public:
  CandidateCache(const QuerySet& qs, std::size_t n)
      : heap_(HeapCompare{&qs}), member_serial_(n, -1) {}

  struct Entry {
    RouteResult result;
    std::int64_t eval_stamp = 0;
    std::uint32_t version = 0;
  };

  void begin_base(const std::vector<std::size_t>& cand) {
    ++base_serial_;
    for (std::size_t idx : cand) member_serial_[idx] = base_serial_;
    for (const HeapEntry& e : parked_) heap_.push(e);
    parked_.clear();
  }

  bool has(std::size_t idx) const { return evaluated_.count(idx) != 0; }
  Entry* find(std::size_t idx) {
    auto it = evaluated_.find(idx);
    return it == evaluated_.end() ? nullptr : &it->second;
  }

  void store(std::size_t idx, const Query& q, RouteResult rr) {
    Entry& e = evaluated_[idx];
    e.result = std::move(rr);
    e.eval_stamp = assign_counter_;
    ++e.version;
    if (e.result.ok()) heap_.push({e.result.path.total_arrival, q.id, idx, e.version});
  }

  void erase(std::size_t idx) { evaluated_.erase(idx); }

  // Marks the cells of an assigned path; cached paths crossing them are
  // stale from now on.
  void commit_assignment(const Path& p) {
    ++assign_counter_;
    for (const Hop& h : p.hops) {
      const Interval first = interval_of(h.entry);
      const Interval last = interval_of(h.exit);
      for (Interval tau = first; tau <= last; ++tau)
        cell_stamp_[cell_key(h.edge, tau)] = assign_counter_;
    }
  }

  bool is_stale(const Entry& e) const {
    for (const Hop& h : e.result.path.hops) {
      const Interval first = interval_of(h.entry);
      const Interval last = interval_of(h.exit);
      for (Interval tau = first; tau <= last; ++tau) {
        auto it = cell_stamp_.find(cell_key(h.edge, tau));
        if (it != cell_stamp_.end() && it->second > e.eval_stamp) return true;
      }
    }
    return false;
  }

  // Pops until the heap's top is a live, current-member, fresh evaluation.
  // Stale tops are re-evaluated through `reeval` and re-pushed. Returns the
  // selected query index or npos when no member candidate has a usable path.
  std::size_t select(const QuerySet& qs, const std::vector<bool>& assigned,
                     const std::function<RouteResult(std::size_t)>& reeval) {
    while (!heap_.empty()) {
      const HeapEntry top = heap_.top();
      heap_.pop();
      if (assigned[top.idx]) continue;
      auto it = evaluated_.find(top.idx);
      if (it == evaluated_.end() || it->second.version != top.version) continue;
      if (member_serial_[top.idx] != base_serial_) {
        parked_.push_back(top);
        continue;
      }
      Entry& e = it->second;
      if (is_stale(e)) {
        e.result = reeval(top.idx);
        e.eval_stamp = assign_counter_;
        ++e.version;
        if (e.result.ok())
          heap_.push({e.result.path.total_arrival, qs[top.idx].query.id, top.idx, e.version});
        continue;
      }
      return top.idx;
    }
    return std::numeric_limits<std::size_t>::max();
  }

 private:
  static std::uint64_t cell_key(EdgeIndex e, Interval tau) {
    return (static_cast<std::uint64_t>(e) << 32) | static_cast<std::uint32_t>(tau);
  }

  struct HeapEntry {
    double arrival;
    std::int64_t qid;
    std::size_t idx;
    std::uint32_t version;
  };
  struct HeapCompare {
    const QuerySet* qs;
    bool operator()(const HeapEntry& a, const HeapEntry& b) const {
      const double fa = (*qs)[a.idx].query.depart + (*qs)[a.idx].phi_cost;
      const double fb = (*qs)[b.idx].query.depart + (*qs)[b.idx].phi_cost;
      return std::tie(a.arrival, fa, a.qid) > std::tie(b.arrival, fb, b.qid);
    }
  };

  std::unordered_map<std::size_t, Entry> evaluated_;
  std::unordered_map<std::uint64_t, std::int64_t> cell_stamp_;
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapCompare> heap_;
  std::vector<HeapEntry> parked_;
  std::vector<std::int64_t> member_serial_;
  std::int64_t base_serial_ = 0;
  std::int64_t assign_counter_ = 0;
};

}  // namespace

CollectiveResult cs_mat(const RoadNetwork& net, const QuerySet& qs, const BatchConfig& cfg,
                        const PenaltyPredictor& predictor, HeuristicCache& heuristics,
                        const LoadSource* background) {
  if (!(cfg.window_y_s > 0.0)) throw ValidationError("batch window must be > 0");
  const std::size_t n = qs.size();
  CollectiveResult res;
  res.elm = EdgeLoadMatrix(net.config().horizon_intervals);
  CombinedLoad composite(res.elm, background);
  const double window_y = net.config().span_seconds_to_intervals(cfg.window_y_s);
  const double horizon = static_cast<double>(net.config().horizon_intervals);

  std::vector<bool> assigned(n, false);
  res.records.reserve(n);
  auto record = [&](std::size_t i, RouteStatus st, Path p = {}) {
    res.records.push_back({qs[i].query.id, i, st, std::move(p)});
    assigned[i] = true;
  };
  for (std::size_t i = 0; i < n; ++i)
    if (!qs[i].reachable) record(i, RouteStatus::kNoPath);

  auto evaluate_one = [&](std::size_t idx) {
    auto h = heuristics.get(qs[idx].query.destination);
    return tlaa_star(net, composite, qs[idx].query, *h);
  };

  std::size_t cursor = 0;
  while (true) {
    while (cursor < n && assigned[cursor]) ++cursor;
    if (cursor == n) break;

    std::vector<std::size_t> batch = form_batch(qs, assigned, cursor, window_y);
    std::size_t head = 0;
    auto batch_front = [&]() -> std::size_t {
      while (head < batch.size() && assigned[batch[head]]) ++head;
      return head < batch.size() ? batch[head] : kNpos;
    };

    bool recheck = false;
    std::size_t base = kNpos;
    std::vector<std::size_t> cand;
    CandidateCache cache(qs, n);

    while (true) {
      if (!recheck) base = batch_front();
      if (base == kNpos) break;

      const Path phi = qs.phi_path(net, base);
      if (phi.total_arrival >= horizon) {
        record(base, RouteStatus::kHorizonOverflow);
        recheck = false;
        continue;
      }
      if (!is_free_flow_path_congested(composite, net, phi)) {
        // every spanned cell is under capacity, so the free-flow path keeps
        // its free-flow timing and no batch member can beat it
        add_path_load(res.elm, phi);
        cache.erase(base);
        cache.commit_assignment(phi);
        record(base, RouteStatus::kOk, phi);
        recheck = false;
        continue;
      }

      if (!recheck) {
        std::vector<std::size_t> alive;
        alive.reserve(batch.size() - head);
        for (std::size_t i = head; i < batch.size(); ++i)
          if (!assigned[batch[i]]) alive.push_back(batch[i]);
        cand = define_candidate_set(qs, alive, base, predictor, cfg.max_candidates);
        cache.begin_base(cand);

        std::vector<std::size_t> to_eval;
        for (std::size_t idx : cand)
          if (!assigned[idx] && !cache.has(idx)) to_eval.push_back(idx);
        if (!to_eval.empty()) {
          for (std::size_t i : to_eval) heuristics.warm(qs[i].query.destination);
          std::vector<RouteResult> results(to_eval.size());
          parallel_for(to_eval.size(), cfg.parallelism,
                       [&](std::size_t k) { results[k] = evaluate_one(to_eval[k]); });
          for (std::size_t k = 0; k < to_eval.size(); ++k)
            cache.store(to_eval[k], qs[to_eval[k]].query, std::move(results[k]));
        }
      }

      const std::size_t chosen = cache.select(qs, assigned, evaluate_one);
      if (chosen == kNpos) {
        // no candidate has a usable path; fail the base and move on
        CandidateCache::Entry* be = cache.find(base);
        record(base, be ? be->result.status : RouteStatus::kNoPath);
        cache.erase(base);
        recheck = false;
        continue;
      }
      Path p = cache.find(chosen)->result.path;
      add_path_load(res.elm, p);
      cache.erase(chosen);
      cache.commit_assignment(p);
      record(chosen, RouteStatus::kOk, std::move(p));
      recheck = chosen != base;
    }
  }
  return res;
}

}  // namespace tlan
