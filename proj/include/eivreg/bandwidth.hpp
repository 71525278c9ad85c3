#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "eivreg/deconvolution.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/kernel.hpp"
#include "eivreg/noise.hpp"
#include "eivreg/quadrature.hpp"
#include "eivreg/targets.hpp"

namespace eivreg {

//! Joint smoothness summary driving the bandwidth rule: the target envelope
//! |psi*(u)| ~ u^-a exp(-b u^r) against the noise envelope
//! |p_eps*(u)| ~ u^-alpha exp(-beta u^rho).  When several targets are in play
//! (the criterion derivatives), the componentwise worst tuple is used; see
//! worst_rate_spec.
struct RateSpec {
  double a = 0.0;
  double b = 0.0;
  double r = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.0;
};

//! Selected cutoff plus the metadata a caller needs to judge it: which branch
//! of the piecewise rule fired, whether the raw formula had to be clamped,
//! and a reminder that the leading constants are fixed to one (the rate
//! theory pins exponents and log-corrections only, never constants).
struct BandwidthChoice {
  double value = 1.0;
  std::string regime;
  bool clamped = false;
  bool unit_constants = true;

  Bandwidth bandwidth() const { return {Bandwidth::Rule::manual, value}; }
};

namespace detail {

//! Negative part: x_- = max(-x, 0).
inline double neg_part(double x) { return x < 0.0 ? -x : 0.0; }

//! L + c log L, frozen at its stationary point L = -c when c < 0.  The raw
//! expression decreases in L below that point, which would make the cutoff
//! shrink as n grows; the decreasing segment is an artifact of using an
//! asymptotic expansion at small n, so the bracket is held at its minimum
//! instead.
inline double log_bracket(double L, double c) {
  if (c < 0.0 && L < -c) L = -c;
  return L + c * std::log(L);
}

}  // namespace detail

//! Rate tuple from a fitted target envelope and the noise envelope.  Fitted
//! polynomial exponents can come out slightly negative for derivative
//! targets (polynomial growth in front of an exponential); they are floored
//! at zero, which only perturbs a log-correction constant.
inline RateSpec make_rate_spec(const R1Tuple& target, const NoiseSmoothness& s) {
  RateSpec rs;
  const bool target_super = target.r > 0.0 && target.b > 0.0;
  rs.a = std::max(target.a, 0.0);
  rs.b = target_super ? target.b : 0.0;
  rs.r = target_super ? target.r : 0.0;
  const bool noise_super = s.rho > 0.0 && s.beta > 0.0;
  rs.alpha = std::max(s.alpha, 0.0);
  rs.beta = noise_super ? s.beta : 0.0;
  rs.rho = noise_super ? s.rho : 0.0;
  return rs;
}

//! Componentwise worst tuple over several targets: smallest decay order r,
//! smallest decay scale b, smallest polynomial exponent a.  Identically zero
//! components impose no constraint and are skipped.
inline RateSpec worst_rate_spec(const std::vector<R1Tuple>& targets,
                                const NoiseSmoothness& s) {
  bool any = false;
  R1Tuple worst;
  for (const auto& t : targets) {
    if (t.zero) continue;
    const bool super = t.r > 0.0 && t.b > 0.0;
    const double r = super ? t.r : 0.0;
    const double b = super ? t.b : 0.0;
    if (!any) {
      worst = t;
      worst.r = r;
      worst.b = b;
      any = true;
      continue;
    }
    worst.r = std::min(worst.r, r);
    worst.b = std::min(worst.b, b);
    worst.a = std::min(worst.a, t.a);
  }
  if (!any)
    throw InvariantViolation("worst_rate_spec: every target is identically zero");
  if (worst.r == 0.0) worst.b = 0.0;
  return make_rate_spec(worst, s);
}

//! Rate-optimal cutoff sequence.  The branch is decided by which of the two
//! envelopes decays exponentially:
//!   - neither: a pure power of n, exponent from whichever of bias and
//!     variance saturates first;
//!   - target only: C_n = [log n/(2b) + c log(log n/(2b))]^{1/r}, with
//!     c = (-2a + (1-r) + (1-r)_-)/(2br);
//!   - noise only: C_n = [log n/(2beta) - c log(log n/(2beta))]^{1/rho}, with
//!     c = (2alpha + (1-rho)_-)/(2 rho beta);
//!   - both: the target-driven form when the target decays strictly faster
//!     (r > rho, or equal order with b > beta, or fully matched scales with
//!     a >= alpha + 1/2), otherwise the noise-driven form with the correction
//!     constant (2alpha + (1-rho)_- - (1-r)_-)/(2 rho beta).
//! All leading constants are one by policy.  Values below one are clamped to
//! one and flagged, as are brackets the log-correction pushed nonpositive.
inline BandwidthChoice select_bandwidth(const RateSpec& rate, double n) {
  if (!(n >= 2.0))
    throw InvariantViolation("select_bandwidth needs a sample size of at least 2");
  if (rate.a < 0.0 || rate.alpha < 0.0)
    throw InvariantViolation("rate spec: polynomial exponents must be >= 0");
  if (rate.b < 0.0 || rate.beta < 0.0 || rate.r < 0.0 || rate.rho < 0.0)
    throw InvariantViolation("rate spec: decay parameters must be >= 0");
  if (rate.rho == 0.0 && rate.beta != 0.0)
    throw InvariantViolation("rate spec: rho = 0 forces beta = 0");

  // normalize half-specified exponential parts down to polynomial decay
  const bool target_super = rate.r > 0.0 && rate.b > 0.0;
  const bool noise_super = rate.rho > 0.0 && rate.beta > 0.0;
  const double a = rate.a, b = target_super ? rate.b : 0.0,
               r = target_super ? rate.r : 0.0;
  const double al = rate.alpha, be = noise_super ? rate.beta : 0.0,
               ro = noise_super ? rate.rho : 0.0;

  BandwidthChoice out;
  double raw = 0.0;
  if (!target_super && !noise_super) {
    if (al <= 0.0) {
      // no decay on either side: the variance never penalizes the cutoff, so
      // the polynomial balance degenerates; fall back to the bias-saturated
      // branch when it exists
      out.regime = "polynomial-degenerate";
      raw = a > 0.5 ? std::pow(n, 1.0 / (2.0 * a - 1.0)) : 1.0;
      out.clamped = !(a > 0.5);
    } else if (a < al + 0.5) {
      out.regime = "polynomial-variance";
      raw = std::pow(n, 1.0 / (2.0 * al));
    } else {
      out.regime = "polynomial-bias";
      raw = std::pow(n, 1.0 / (2.0 * a - 1.0));
    }
  } else if (target_super && !noise_super) {
    out.regime = "target-exponential";
    const double L = std::log(n) / (2.0 * b);
    const double c =
        (-2.0 * a + (1.0 - r) + detail::neg_part(1.0 - r)) / (2.0 * b * r);
    const double bracket = detail::log_bracket(L, c);
    raw = bracket > 0.0 ? std::pow(bracket, 1.0 / r) : 0.0;
    out.clamped = !(bracket > 0.0);
  } else if (!target_super && noise_super) {
    out.regime = "noise-exponential";
    const double L = std::log(n) / (2.0 * be);
    const double c = -(2.0 * al + detail::neg_part(1.0 - ro)) / (2.0 * ro * be);
    const double bracket = detail::log_bracket(L, c);
    raw = bracket > 0.0 ? std::pow(bracket, 1.0 / ro) : 0.0;
    out.clamped = !(bracket > 0.0);
  } else {
    // both exponential; compare decay orders with a relative guard
    const double eps_r = 1e-9 * std::max(1.0, std::max(r, ro));
    const double eps_b = 1e-9 * std::max(1.0, std::max(b, be));
    const bool same_order = std::abs(r - ro) <= eps_r;
    const bool target_faster =
        r > ro + eps_r || (same_order && b > be + eps_b) ||
        (same_order && std::abs(b - be) <= eps_b && a >= al + 0.5);
    if (target_faster) {
      out.regime = "both-exponential-target";
      const double L = std::log(n) / (2.0 * b);
      const double c =
          (-2.0 * a + (1.0 - r) + detail::neg_part(1.0 - r)) / (2.0 * b * r);
      const double bracket = detail::log_bracket(L, c);
      raw = bracket > 0.0 ? std::pow(bracket, 1.0 / r) : 0.0;
      out.clamped = !(bracket > 0.0);
    } else {
      out.regime = "both-exponential-noise";
      const double L = std::log(n) / (2.0 * be);
      const double c =
          -(2.0 * al + detail::neg_part(1.0 - ro) - detail::neg_part(1.0 - r)) /
          (2.0 * ro * be);
      const double bracket = detail::log_bracket(L, c);
      raw = bracket > 0.0 ? std::pow(bracket, 1.0 / ro) : 0.0;
      out.clamped = !(bracket > 0.0);
    }
  }

  if (!std::isfinite(raw)) {
    out.clamped = true;
    raw = 1.0;
  }
  if (raw < 1.0) {
    out.clamped = true;
    raw = 1.0;
  }
  out.value = raw;
  return out;
}

//! The two-norm bookkeeping behind the consistency condition for the
//! kernel-smoothed criteria: a squared bias term from the spectrum the window
//! cuts away, plus a variance term from the deconvolution amplification over
//! the window, each taken as the better of the L1 and L2 norms.
//!   bias_sq     = min_q || psi* (K*_{Cn} - 1) ||_q^2
//!   variance_sq = min_q || psi* K*_{Cn} / p_eps* ||_q^2
//!   total(n)    = bias_sq + variance_sq / n
//! A sound cutoff sequence drives total(n) to zero along growing n.
struct SmoothingCondition {
  double bias_sq = 0.0;
  double variance_sq = 0.0;
  double total = 0.0;
};

inline SmoothingCondition smoothing_condition(const TargetFunctions& psi,
                                              const NoiseModel& noise,
                                              const KernelSpec& kernel,
                                              double cn, double n,
                                              const QuadratureSpec& spec = {}) {
  if (!(cn > 0.0)) throw InvariantViolation("bandwidth must be positive");
  if (!(n >= 1.0)) throw InvariantViolation("sample size must be >= 1");
  kernel.validate();

  // the norms enter through a min over q = 1, 2, so one of the two tail
  // integrals is allowed to diverge as long as the other settles; a tail the
  // block integrator cannot certify counts as infinite, which can only
  // overstate the bound, never understate it.  The settle tolerance is
  // relaxed relative to the caller's spec: this is a decay diagnostic, and
  // slowly decaying polynomial tails would otherwise exhaust the geometric
  // blocks hunting for digits the bound does not need.
  QuadratureSpec tail_spec = spec;
  tail_spec.rel_tol = std::max(spec.rel_tol, 1e-5);
  const auto tail_or_inf = [&](auto&& f) {
    try {
      return 2.0 * integrate_to_infinity(f, cn, tail_spec, 0.0, cn);
    } catch (const TailNotIntegrable&) {
      return std::numeric_limits<double>::infinity();
    } catch (const QuadratureFailure&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // the window equals one on [-Cn, Cn], so the bias integrand starts at Cn
  const auto bias_abs = [&](double u) {
    return std::abs(psi.transform(u)) * std::abs(kernel.ft(u / cn) - 1.0);
  };
  const auto bias_sq = [&](double u) {
    const double v = bias_abs(u);
    return v * v;
  };
  const double b1 = tail_or_inf(bias_abs);
  const double b2 = tail_or_inf(bias_sq);

  const auto var_abs = [&](double u) {
    return std::abs(psi.transform(u)) * std::abs(kernel.ft(u / cn)) *
           deconv_weight(noise, u);
  };
  const auto var_sq = [&](double u) {
    const double v = var_abs(u);
    return v * v;
  };
  const double hi = kernel.support() * cn;
  const double v1 = 2.0 * integrate(var_abs, 0.0, hi, spec);
  const double v2 = 2.0 * integrate(var_sq, 0.0, hi, spec);

  SmoothingCondition out;
  out.bias_sq = std::min(b1 * b1, b2);
  out.variance_sq = std::min(v1 * v1, v2);
  if (!std::isfinite(out.bias_sq) || !std::isfinite(out.variance_sq))
    throw TailNotIntegrable(
        "smoothing condition: neither norm of a window term is finite");
  out.total = out.bias_sq + out.variance_sq / n;
  return out;
}

}  // namespace eivreg
