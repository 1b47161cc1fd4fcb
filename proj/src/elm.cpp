#include "tlan/elm.hpp"

#include <algorithm>
#include <cmath>

#include "tlan/routing.hpp"

namespace tlan {

int EdgeLoadMatrix::load(EdgeIndex e, Interval tau) const {
  auto it = cells_.find(key(e, tau));
  return it == cells_.end() ? 0 : it->second;
}

void EdgeLoadMatrix::add(EdgeIndex e, Interval tau, int delta) {
  if (tau < 0 || (horizon_ > 0 && tau >= horizon_))
    throw ValidationError("ELM interval " + std::to_string(tau) + " outside horizon");
  auto [it, inserted] = cells_.try_emplace(key(e, tau), 0);
  it->second += delta;
  if (it->second < 0) throw ValidationError("ELM load underflow at interval " + std::to_string(tau));
  if (it->second == 0) cells_.erase(it);
}

void EdgeLoadMatrix::set_load(EdgeIndex e, Interval tau, int value) {
  if (value < 0) throw ValidationError("ELM load must be >= 0");
  if (tau < 0 || (horizon_ > 0 && tau >= horizon_))
    throw ValidationError("ELM interval " + std::to_string(tau) + " outside horizon");
  if (value == 0)
    cells_.erase(key(e, tau));
  else
    cells_[key(e, tau)] = value;
}

std::int64_t EdgeLoadMatrix::total_mass() const {
  std::int64_t sum = 0;
  for (const auto& [k, v] : cells_) sum += v;
  return sum;
}

std::size_t EdgeLoadMatrix::nonzero_cells() const { return cells_.size(); }

std::vector<std::tuple<EdgeIndex, Interval, int>> EdgeLoadMatrix::sorted_cells() const {
  std::vector<std::tuple<EdgeIndex, Interval, int>> out;
  out.reserve(cells_.size());
  for (const auto& [k, v] : cells_)
    out.emplace_back(static_cast<EdgeIndex>(k >> 32),
                     static_cast<Interval>(static_cast<std::uint32_t>(k)), v);
  std::sort(out.begin(), out.end());
  return out;
}

double delay_exponent(double load, double capacity) {
  if (load <= capacity) return 1.0;
  return std::min(1.0, 1.0 / (load - capacity));
}

double arrival_time(const LoadSource& loads, const ArrivalQuery& q, const EdgeAttrs& attrs) {
  const Interval tau = interval_of(q.arrival_at_tail);
  double offset = q.arrival_at_tail - static_cast<double>(tau);
  if (offset < 0.0) offset = 0.0;  // boundary snap from interval_of
  const double l = loads.load(q.edge, tau) + (q.include_self ? 1.0 : 0.0);
  const double eps = delay_exponent(l, attrs.free_flow_capacity);
  // pow(x, 1.0) is not guaranteed to return x bit-exactly; free flow must be
  const double delay = (eps == 1.0 || offset == 0.0) ? offset : std::pow(offset, eps);
  return static_cast<double>(tau) + delay + attrs.min_travel_time;
}

void add_path_load(EdgeLoadMatrix& elm, const Path& path) {
  for (const Hop& h : path.hops) {
    const Interval first = interval_of(h.entry);
    const Interval last = interval_of(h.exit);
    for (Interval tau = first; tau <= last; ++tau) elm.add(h.edge, tau, +1);
  }
}

void remove_path_load(EdgeLoadMatrix& elm, const Path& path) {
  for (const Hop& h : path.hops) {
    const Interval first = interval_of(h.entry);
    const Interval last = interval_of(h.exit);
    for (Interval tau = first; tau <= last; ++tau) elm.add(h.edge, tau, -1);
  }
}

EdgeLoadMatrix apply_control_factor(const EdgeLoadMatrix& base, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw ValidationError("gamma must lie in [0, 1]");
  EdgeLoadMatrix out(base.horizon());
  for (const auto& [e, tau, l] : base.sorted_cells()) {
    const int scaled = static_cast<int>(std::floor(l * (1.0 - gamma) + 0.5));
    if (scaled > 0) out.set_load(e, tau, scaled);
  }
  return out;
}

}  // namespace tlan
