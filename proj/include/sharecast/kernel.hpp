#pragma once

// Memory kernel: density of the delay between exposure and reshare.
//
//   phi(s) = c                        for 0 <= s <= s0
//   phi(s) = c * (s / s0)^-(1+theta)  for s > s0
//
// All integrals are evaluated with the closed-form antiderivative.

#include <cmath>
#include <limits>

#include "errors.hpp"

namespace sharecast {

struct KernelParams {
  double c = 1.0;      // rate per second on the plateau
  double s0 = 300.0;   // plateau length, seconds
  double theta = 0.242;
  bool normalized = false;

  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

inline void validate(const KernelParams& k) {
  if (!(k.c > 0.0) || !(k.s0 > 0.0) || !(k.theta > 0.0) || !std::isfinite(k.c) ||
      !std::isfinite(k.s0) || !std::isfinite(k.theta))
    throw invalid_argument("kernel parameters must be finite and positive");
}

/// Integral of phi over [0, inf).
inline double total_mass(const KernelParams& k) { return k.c * k.s0 * (1.0 + 1.0 / k.theta); }

inline KernelParams normalize(KernelParams k) {
  if (!(k.s0 > 0.0) || !(k.theta > 0.0)) throw invalid_argument("kernel s0 and theta must be positive");
  k.c = 1.0 / (k.s0 * (1.0 + 1.0 / k.theta));
  k.normalized = true;
  return k;
}

inline KernelParams default_kernel() { return normalize(KernelParams{1.0, 300.0, 0.242, false}); }

inline double phi(double s, const KernelParams& k) {
  if (!(s >= 0.0)) throw invalid_argument("phi: delay must be non-negative");
  if (s <= k.s0) return k.c;
  return k.c * std::pow(s / k.s0, -(1.0 + k.theta));
}

namespace detail {

// Mass of the power-law tail over [a, b] with s0 <= a <= b <= inf.
inline double tail_mass(double a, double b, const KernelParams& k) {
  if (b <= a) return 0.0;
  // (a/s0)^-theta - (b/s0)^-theta, factored to avoid cancellation when a ~ b.
  const double head = std::pow(a / k.s0, -k.theta);
  const double frac = -std::expm1(-k.theta * std::log(b / a));
  return k.c * k.s0 / k.theta * head * frac;
}

}  // namespace detail

/// Exact integral of phi over [a, b]; b may be +infinity.
inline double phi_mass(double a, double b, const KernelParams& k) {
  if (!(a >= 0.0) || !(b >= a)) throw invalid_argument("phi_mass: need 0 <= a <= b");
  if (a == b) return 0.0;
  if (b <= k.s0) return k.c * (b - a);
  if (a >= k.s0) return detail::tail_mass(a, b, k);
  return k.c * (k.s0 - a) + detail::tail_mass(k.s0, b, k);
}

/// Inverse of the cumulative mass: the delay x with phi_mass(0, x) = m.
/// m must lie in [0, total_mass(k)]; the total maps to +infinity.
inline double inverse_mass(double m, const KernelParams& k) {
  if (!(m >= 0.0)) throw invalid_argument("inverse_mass: negative mass");
  const double plateau = k.c * k.s0;
  if (m <= plateau) return m / k.c;
  const double rest = 1.0 - (m - plateau) * k.theta / plateau;
  if (rest <= 0.0) return std::numeric_limits<double>::infinity();
  return k.s0 * std::pow(rest, -1.0 / k.theta);
}

}  // namespace sharecast
