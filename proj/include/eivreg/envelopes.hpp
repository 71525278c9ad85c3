#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "eivreg/errors.hpp"
#include "eivreg/noise.hpp"
#include "eivreg/targets.hpp"

namespace eivreg {

//! Asymptotic class of |psi*(u)| / |p_eps*(u)|.  Up to bounded constants the
//! ratio behaves like u^{alpha - a} exp(beta u^rho - b u^r), so the class is
//! decided by comparing the exponential orders first and the polynomial gap
//! when the exponentials cancel.
enum class RatioClass { integrable, boundary, growing };

inline RatioClass classify_ratio(const R1Tuple& t, const NoiseSmoothness& s) {
  if (t.zero) return RatioClass::integrable;
  const double eps_r = 1e-9;
  const double eps_b = 1e-9 * std::max(1.0, s.beta);
  const bool noise_super = s.rho > 0.0 && s.beta > 0.0;
  const bool target_super = t.r > 0.0 && t.b > 0.0;
  if (noise_super) {
    if (!target_super) return RatioClass::growing;
    if (t.r > s.rho + eps_r) return RatioClass::integrable;
    if (t.r < s.rho - eps_r) return RatioClass::growing;
    if (t.b > s.beta + eps_b) return RatioClass::integrable;
    if (t.b < s.beta - eps_b) return RatioClass::growing;
    return RatioClass::boundary;
  }
  if (target_super) return RatioClass::integrable;
  const double gap = t.a - s.alpha;  // net polynomial decay exponent
  if (gap > 1.0 + 1e-9) return RatioClass::integrable;
  if (gap < 1.0 - 1e-9) return RatioClass::growing;
  return RatioClass::boundary;
}

//! True when the ratio transform is absolutely integrable.  Boundary cases
//! (matching exponential orders) fall back to the polynomial gap.
inline bool ratio_integrable(const R1Tuple& t, const NoiseSmoothness& s) {
  switch (classify_ratio(t, s)) {
    case RatioClass::integrable:
      return true;
    case RatioClass::boundary:
      return t.a - s.alpha > 1.0 + 1e-9;
    case RatioClass::growing:
      return false;
  }
  return false;
}

//! Throws RatioNotIntegrable with a labelled message unless the ratio
//! envelope is integrable.
inline void require_ratio_integrable(const R1Tuple& t, const NoiseSmoothness& s,
                                     const std::string& label) {
  if (!ratio_integrable(t, s))
    throw RatioNotIntegrable(label + ": transform does not dominate the noise "
                             "characteristic function decay");
}

//! Truncation point for the frequency integral of an integrable ratio: the
//! first u past the envelope peak where the log envelope has dropped by
//! log(1/tol).  Constants cancel against the peak, so only the exponents
//! enter.  Throws when the drop point exceeds u_cap (slow polynomial decay).
inline double ratio_cutoff(const R1Tuple& t, const NoiseSmoothness& s,
                           double tol = 1e-12, double u_cap = 2e4) {
  if (t.zero) return 1.0;
  if (!(tol > 0.0 && tol < 1.0))
    throw InvariantViolation("ratio_cutoff needs tol in (0, 1)");
  const double u_start = std::max({1.0, t.u0, s.u0});
  const auto log_env = [&](double u) {
    return (s.alpha - t.a) * std::log(u) +
           (s.rho > 0.0 ? s.beta * std::pow(u, s.rho) : 0.0) -
           (t.r > 0.0 ? t.b * std::pow(u, t.r) : 0.0);
  };
  const double drop = std::log(tol);
  double best = log_env(u_start);
  double u = u_start;
  while (u < u_cap) {
    u *= 1.05;
    const double v = log_env(u);
    if (v > best)
      best = v;
    else if (v < best + drop)
      return u;
  }
  throw QuadratureFailure(
      "ratio_cutoff: envelope needs u > " + std::to_string(u_cap) +
      " to fall below the truncation tolerance");
}

}  // namespace eivreg
