#pragma once

#include <algorithm>
#include <cmath>

#include "ctde/hazard.hpp"

namespace ctde::detail {

inline constexpr double kInversionRelTol = 1e-12;
inline constexpr int kInversionMaxIterations = 200;

// Smallest t in [start, upper] with integral(t) >= amount, where integral is
// nondecreasing with integral(start) = 0 and derivative `rate`. Brackets by
// doubling when upper is infinite (returning +infinity if no bracket is
// found), then runs bisection safeguarded Newton steps to relative time
// tolerance 1e-12 or 200 iterations.
template <class Integral, class Rate>
double invert_increasing(double start, double amount, Integral integral, Rate rate,
                         double upper = kInfinity) {
  if (!(amount > 0.0)) return start;
  double lo = start;
  double hi = upper;
  if (std::isinf(upper)) {
    double step = std::max(1.0, std::abs(start));
    hi = start + step;
    int doublings = 0;
    while (!(integral(hi) >= amount)) {
      lo = hi;
      step *= 2.0;
      hi = start + step;
      if (++doublings > kInversionMaxIterations || !std::isfinite(hi)) return kInfinity;
    }
  }
  double t = 0.5 * (lo + hi);
  for (int i = 0; i < kInversionMaxIterations; ++i) {
    double f = integral(t) - amount;
    if (f == 0.0) return t;
    if (f > 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    if (hi - lo <= kInversionRelTol * std::abs(hi)) return hi;
    double slope = rate(t);
    double next = (slope > 0.0 && std::isfinite(slope)) ? t - f / slope : kInfinity;
    bool newton_ok = next > lo && next < hi;
    if (!newton_ok) next = 0.5 * (lo + hi);
    if (newton_ok && std::abs(next - t) <= kInversionRelTol * std::abs(t)) return next;
    t = next;
  }
  return hi;
}

}  // namespace ctde::detail
