#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace tlan {

/// Dense internal node index (assigned in ascending external-id order).
using NodeIndex = std::uint32_t;
/// Dense internal edge index.
using EdgeIndex = std::uint32_t;
/// Discrete time-interval index; valid range [0, horizon).
using Interval = std::int32_t;

inline constexpr NodeIndex kInvalidNode = std::numeric_limits<NodeIndex>::max();
inline constexpr EdgeIndex kInvalidEdge = std::numeric_limits<EdgeIndex>::max();
inline constexpr double kInfCost = std::numeric_limits<double>::infinity();

/// Absolute tolerance for all time comparisons, in interval units.
inline constexpr double kTimeTol = 1e-9;

/// Interval containing a continuous time value. Times within kTimeTol of an
/// interval boundary are snapped up to the next interval so accumulated
/// floating-point noise cannot flip a floor.
inline Interval interval_of(double t) {
  return static_cast<Interval>(std::floor(t + kTimeTol));
}

/// Parse failure in an input file; carries the 1-based line number.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Violation of a structural invariant (bad attribute, dangling endpoint,
/// ELM underflow, ...).
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tlan
