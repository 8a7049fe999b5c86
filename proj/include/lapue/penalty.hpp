#pragma once

#include <algorithm>
#include <stdexcept>

namespace lapue {

enum class PenaltyMode { kSmooth, kMax };

// Smoothed positive-part penalty with band parameter t > 0:
//   h(z,t) = z                for z >  t
//          = (z+t)^2 / (4t)   for -t <= z <= t
//          = 0                for z < -t
// h is C^1 in z and satisfies 0 <= h(z,t) - max(z,0) <= t/4.
inline double smooth_penalty(double z, double t) {
  if (z > t) return z;
  if (z < -t) return 0.0;
  const double s = z + t;
  return s * s / (4.0 * t);
}

inline double smooth_penalty_deriv(double z, double t) {
  if (z > t) return 1.0;
  if (z < -t) return 0.0;
  return (z + t) / (2.0 * t);
}

inline double penalty(double z, double t, PenaltyMode mode) {
  if (mode == PenaltyMode::kMax) return std::max(z, 0.0);
  return smooth_penalty(z, t);
}

// Max mode is nonsmooth at z = 0; the lower subgradient selection (0) is
// returned there, for diagnostics only.
inline double penalty_deriv(double z, double t, PenaltyMode mode) {
  if (mode == PenaltyMode::kMax) return z > 0.0 ? 1.0 : 0.0;
  return smooth_penalty_deriv(z, t);
}

}  // namespace lapue
