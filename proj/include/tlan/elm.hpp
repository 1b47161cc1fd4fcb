#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tlan/network.hpp"
#include "tlan/types.hpp"

namespace tlan {

struct Path;  // routing.hpp

/// Read interface for per-(edge, interval) loads. Implementations must be
/// safe for concurrent reads while no writer is active.
class LoadSource {
 public:
  virtual ~LoadSource() = default;
  virtual int load(EdgeIndex e, Interval tau) const = 0;
};

/// Sparse edge-load matrix: (edge, interval) -> expected vehicle count.
/// Absent entry == load 0. Single-writer / multi-reader: all mutation must be
/// serialized through one owner.
class EdgeLoadMatrix final : public LoadSource {
 public:
  EdgeLoadMatrix() = default;
  explicit EdgeLoadMatrix(int horizon_intervals) : horizon_(horizon_intervals) {}

  int horizon() const { return horizon_; }

  int load(EdgeIndex e, Interval tau) const override;
  void add(EdgeIndex e, Interval tau, int delta);
  void set_load(EdgeIndex e, Interval tau, int value);

  /// Total vehicle-interval mass currently stored.
  std::int64_t total_mass() const;
  std::size_t nonzero_cells() const;

  /// Nonzero cells as (edge, interval, load), sorted for stable export.
  std::vector<std::tuple<EdgeIndex, Interval, int>> sorted_cells() const;

  bool operator==(const EdgeLoadMatrix& other) const { return cells_ == other.cells_; }

 private:
  static std::uint64_t key(EdgeIndex e, Interval tau) {
    return (static_cast<std::uint64_t>(e) << 32) | static_cast<std::uint32_t>(tau);
  }
  std::unordered_map<std::uint64_t, int> cells_;
  int horizon_ = 0;
};

/// Time-constant extrapolation of one interval: every read returns the load
/// recorded at the pinned interval. Backs the SLAD baseline.
class SnapshotView final : public LoadSource {
 public:
  SnapshotView(const LoadSource& base, Interval pinned) : base_(base), pinned_(pinned) {}
  int load(EdgeIndex e, Interval) const override { return base_.load(e, pinned_); }

 private:
  const LoadSource& base_;
  Interval pinned_;
};

/// Sum of a mutable foreground and an immutable background (gamma
/// experiments). background may be null.
class CombinedLoad final : public LoadSource {
 public:
  CombinedLoad(const LoadSource& fg, const LoadSource* bg) : fg_(fg), bg_(bg) {}
  int load(EdgeIndex e, Interval tau) const override {
    return fg_.load(e, tau) + (bg_ ? bg_->load(e, tau) : 0);
  }

 private:
  const LoadSource& fg_;
  const LoadSource* bg_;
};

/// Load-dependent delay exponent: 1 in free flow (load <= capacity), else
/// 1/(load - capacity) clamped to at most 1. With a real-valued capacity the
/// raw expression exceeds 1 for 0 < load-capacity < 1, which would make
/// congested traversal faster than free flow; the clamp keeps the result in
/// (0, 1].
double delay_exponent(double load, double capacity);

struct ArrivalQuery {
  EdgeIndex edge = kInvalidEdge;
  double arrival_at_tail = 0.0;  // a_i, continuous interval units
  bool include_self = false;     // count the prospective vehicle toward l
};

/// Load-aware arrival time at the edge head:
///   a_j = tau + (a_i - tau)^eps(tau) + min_travel_time,  tau = floor(a_i),
/// with eps read from the load at (edge, tau). Excludes the querying vehicle
/// unless include_self. The delay term lies in [0, 1), so
/// a_i < a_j < tau + 1 + min_travel_time, which is what makes the function
/// FIFO-compliant. Horizon checks are the caller's responsibility.
double arrival_time(const LoadSource& loads, const ArrivalQuery& q, const EdgeAttrs& attrs);

/// Increment loads for every interval spanned by each hop of the path:
/// a vehicle occupies edge e for all tau with floor(entry) <= tau <= floor(exit).
void add_path_load(EdgeLoadMatrix& elm, const Path& path);

/// Exact inverse of add_path_load. Throws ValidationError if any cell would
/// go negative (removing a path that was never added).
void remove_path_load(EdgeLoadMatrix& elm, const Path& path);

/// Background load for uncontrolled-traffic experiments: every cell becomes
/// round(load * (1 - gamma)), rounding half up.
EdgeLoadMatrix apply_control_factor(const EdgeLoadMatrix& base, double gamma);

}  // namespace tlan
