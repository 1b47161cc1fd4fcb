#pragma once

#include <doctest.h>

#include <cmath>

#include "testlib.hpp"

// Absolute-tolerance comparison; doctest's Approx is relative.
struct AbsApprox {
  double value;
  double tol;
};

inline AbsApprox approx_abs(double value, double tol) { return {value, tol}; }

inline bool operator==(double lhs, const AbsApprox& rhs) {
  return std::fabs(lhs - rhs.value) <= rhs.tol;
}
inline bool operator==(const AbsApprox& lhs, double rhs) { return rhs == lhs; }

inline doctest::String toString(const AbsApprox& a) {
  return doctest::String("within(") + doctest::toString(a.value) + ", " +
         doctest::toString(a.tol) + ")";
}
