#pragma once

#include <cmath>

#include "ctde/hazard.hpp"

namespace ctde::detail {

// Absolute putative time for a duration since enabling, kept strictly after
// `now` when rounding would otherwise place it at or before the current
// stopping time.
inline double absolute_time(double enabling_time, double duration, double now) {
  double t = enabling_time + duration;
  if (!(t > now) && std::isfinite(t)) t = std::nextafter(now, kInfinity);
  return t;
}

inline double log_complement(double mass) {
  return mass >= 1.0 ? kInfinity : -std::log1p(-mass);
}

}  // namespace ctde::detail
