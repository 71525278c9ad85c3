#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "eivreg/bandwidth.hpp"
#include "eivreg/deconvolution.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/noise.hpp"
#include "eivreg/quadrature.hpp"
#include "eivreg/targets.hpp"

namespace eivreg {

//! Squared-error order of the estimator under one smoothness regime.  The
//! handle keeps only the exponents and log-corrections; leading constants are
//! one by the same policy as the cutoff rule.  phi2 is positive and, beyond a
//! regime-dependent burn-in, nonincreasing in the sample size.
struct RateResult {
  std::string regime;
  std::function<double(double)> phi2;
  bool parametric = false;  // phi2(n) = O(1/n)
  double value = 0.0;       // phi2 at the queried sample size
};

namespace detail {

//! Log-power correction exponent for the exponential-decay cells.
inline double rate_log_power(double a, double r, double rho) {
  return (-2.0 * a + 1.0 - r + neg_part(1.0 - r)) / rho;
}

}  // namespace detail

//! Squared-error order phi^2(n) for a declared smoothness pairing.  The
//! dispatch covers the full cross of power-law and exponential envelopes:
//!   - power-law target (b = r = 0, needs a > 1/2):
//!       ordinary noise, a <  alpha + 1/2  ->  n^{-(2a-1)/(2 alpha)}
//!       ordinary noise, a >= alpha + 1/2  ->  1/n
//!       exponential noise                 ->  (log n)^{-(2a-1)/rho}
//!   - exponential target (b, r > 0):
//!       ordinary noise                    ->  1/n
//!       r < rho   ->  (log n)^A exp{-2b (log n / (2 beta))^{r/rho}}
//!       r = rho, b < beta                 ->  (log n)^{A + 2 alpha b/(beta r)} n^{-b/beta}
//!       r = rho, b = beta, a <  alpha+1/2 ->  (log n)^{(2 alpha - 2a + 1)/r} / n
//!       r = rho, b = beta, a >= alpha+1/2 ->  1/n
//!       r = rho, b > beta                 ->  1/n
//!       r > rho > 0                       ->  1/n
//! with A = (-2a + 1 - r + (1 - r)_-)/rho.  Half-specified exponential parts
//! (one of b, r zero but not both, likewise beta, rho) and power-law targets
//! too rough for a vanishing bound (a <= 1/2) fall outside every cell and
//! raise InvalidRegime.
inline RateResult theoretical_rate(const RateSpec& rate, double n) {
  if (!(n >= 2.0))
    throw InvariantViolation("theoretical_rate needs a sample size of at least 2");
  const double a = rate.a, b = rate.b, r = rate.r;
  const double al = rate.alpha, be = rate.beta, ro = rate.rho;
  for (double v : {a, b, r, al, be, ro})
    if (!std::isfinite(v)) throw InvalidRegime("rate spec: parameters must be finite");
  if (a < 0.0 || al < 0.0)
    throw InvalidRegime("rate spec: polynomial exponents must be >= 0");
  if (b < 0.0 || be < 0.0 || r < 0.0 || ro < 0.0)
    throw InvalidRegime("rate spec: decay parameters must be >= 0");
  if ((r > 0.0) != (b > 0.0))
    throw InvalidRegime(
        "rate spec: exponential target decay needs both b > 0 and r > 0");
  if ((ro > 0.0) != (be > 0.0))
    throw InvalidRegime(
        "rate spec: exponential noise decay needs both beta > 0 and rho > 0");

  RateResult out;
  const auto finish = [&](const char* regime, std::function<double(double)> phi2,
                          bool parametric) {
    out.regime = regime;
    out.value = phi2(n);
    out.phi2 = std::move(phi2);
    out.parametric = parametric;
    return out;
  };
  const auto inv_n = [](double m) { return 1.0 / m; };

  if (r == 0.0) {
    // the bound is a power of the spectral tail, which must vanish
    if (a <= 0.5)
      throw InvalidRegime(
          "rate spec: a power-law target needs a > 1/2 for a vanishing bound");
    if (ro > 0.0) {
      const double p = (2.0 * a - 1.0) / ro;
      return finish(
          "logarithmic",
          [p](double m) { return std::pow(std::log(m), -p); }, false);
    }
    if (a >= al + 0.5) return finish("power-law-parametric", inv_n, true);
    const double p = (2.0 * a - 1.0) / (2.0 * al);
    return finish(
        "power-law", [p](double m) { return std::pow(m, -p); }, false);
  }

  if (ro == 0.0) return finish("smooth-target-parametric", inv_n, true);

  if (r < ro) {
    const double A = detail::rate_log_power(a, r, ro);
    const double e = r / ro;
    return finish(
        "noise-dominated",
        [A, b, be, e](double m) {
          const double L = std::log(m);
          return std::pow(L, A) * std::exp(-2.0 * b * std::pow(L / (2.0 * be), e));
        },
        false);
  }
  if (r > ro) return finish("target-dominated-parametric", inv_n, true);

  if (b < be) {
    const double p = detail::rate_log_power(a, r, ro) + 2.0 * al * b / (be * r);
    const double q = b / be;
    return finish(
        "matched-noise-heavy",
        [p, q](double m) { return std::pow(std::log(m), p) * std::pow(m, -q); },
        false);
  }
  if (b > be) return finish("matched-target-heavy-parametric", inv_n, true);
  if (a >= al + 0.5) return finish("matched-balanced-parametric", inv_n, true);
  const double p = (2.0 * al - 2.0 * a + 1.0) / r;
  return finish(
      "matched-balanced",
      [p](double m) { return std::pow(std::log(m), p) / m; }, false);
}

//! Numerical audit of a spectral tail bound.  lhs is the tail integral by
//! quadrature, rhs the closed-form envelope bound; pass allows a five percent
//! slack for the fitted constants.  A check below the envelope's validity
//! threshold is skipped (flagged and vacuously passing): the envelope makes
//! no claim there.
struct TailBoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  bool skipped = false;
};

namespace detail {

constexpr double tail_bound_slack = 1.05;

//! Certified tail normalizer: for cutoffs at or above u_claim,
//!   integral_{|u| >= C} u^{-a} exp(-b u^r) du  <=  (1/R) C^{-a+1-r} exp(-b C^r).
//! Exponential decay integrates by parts to R = b r / 2; when the power
//! factor grows (a + r < 1) the same step leaves a geometric correction that
//! is summable once b r u^r exceeds twice the growth exponent, which sets the
//! claim threshold.  A pure power tail integrates exactly and needs a > 1.
struct TailEnvelope {
  double R = 0.0;
  double u_claim = 1.0;
};

inline TailEnvelope tail_envelope(const R1Tuple& t) {
  if (t.r > 0.0 && t.b > 0.0) {
    const double br = t.b * t.r;
    const double kappa = neg_part(t.a + t.r - 1.0);
    const double u =
        std::max(t.u0, kappa > 0.0 ? std::pow(2.0 * kappa / br, 1.0 / t.r) : 0.0);
    return {0.5 * br * (1.0 - kappa / (br * std::pow(u, t.r))), u};
  }
  if (t.a > 1.0) return {0.5 * (t.a - 1.0), t.u0};
  throw TailNotIntegrable(
      "tail bound: a power-law transform tail needs a > 1 to be integrable");
}

}  // namespace detail

//! Checks  integral_{|u| >= Cn} |psi*(u)| du  <=  (L/R) Cn^{-a+1-r} exp(-b Cn^r)
//! against the transform itself.  Throws TailNotIntegrable when the envelope
//! cannot certify a finite tail, or when the quadrature blocks fail to settle.
inline TailBoundCheck tail_bound_check(const std::function<Complex(double)>& transform,
                                       const R1Tuple& tuple, double cn,
                                       const QuadratureSpec& spec = {}) {
  if (!(cn > 0.0)) throw InvariantViolation("tail bound: cutoff must be positive");
  TailBoundCheck out;
  if (tuple.zero) {  // no spectral mass, nothing to bound
    out.pass = true;
    return out;
  }
  const auto env = detail::tail_envelope(tuple);
  const bool exp_decay = tuple.r > 0.0 && tuple.b > 0.0;
  const double r = exp_decay ? tuple.r : 0.0;
  const double b = exp_decay ? tuple.b : 0.0;
  out.rhs = (tuple.L_hi / env.R) * std::pow(cn, -tuple.a + 1.0 - r) *
            std::exp(-b * std::pow(cn, r));
  // substituting u = cn e^s turns power decay into exponential decay in s, so
  // the geometric blocks settle before their width hits the panel cap; beyond
  // the representable range the integrand of a certified tail is zero anyway
  out.lhs = 2.0 * integrate_to_infinity(
                      [&](double s) {
                        const double u = cn * std::exp(s);
                        if (!std::isfinite(u)) return 0.0;
                        const double g = std::abs(transform(u)) * u;
                        return std::isfinite(g) ? g : 0.0;
                      },
                      0.0, spec);
  out.skipped = cn < env.u_claim;
  out.pass = out.skipped || out.lhs <= out.rhs * detail::tail_bound_slack;
  return out;
}

inline TailBoundCheck tail_bound_check(const WeightedTarget& target, double cn,
                                       const QuadratureSpec& spec = {}) {
  return tail_bound_check(target.psi().transform, target.smoothness(), cn, spec);
}

//! Checks the deconvolution companion bound
//!   integral_{|u| <= Cn} |psi*(u)| / |p_eps*(u)| du  <=  rhs
//! with rhs assembled from registered constants only: a head piece bounding
//! the band below the envelope thresholds by sup|psi*| / min|p_eps*|, plus the
//! envelope integral max |u|^{alpha-a} exp(beta u^rho - b u^r) over the rest,
//! where the exponential factor is bounded by its value at the endpoints (or
//! at its interior critical point when the target decay order is the faster
//! one).  The construction keeps the growth order of the analytic bound in Cn
//! and overstates it by design, so a failure indicates a wrong envelope, not
//! a loose one.  sup_head must dominate sup_u |psi*(u)|; the L1 norm of psi
//! always does.
inline TailBoundCheck ratio_bound_check(const std::function<Complex(double)>& transform,
                                        const R1Tuple& tuple, double sup_head,
                                        const NoiseModel& noise, double cn,
                                        const QuadratureSpec& spec = {}) {
  if (!(cn > 0.0)) throw InvariantViolation("ratio bound: cutoff must be positive");
  if (!(sup_head >= 0.0) || !std::isfinite(sup_head))
    throw InvariantViolation("ratio bound: head bound must be finite");
  TailBoundCheck out;
  if (tuple.zero) {
    out.pass = true;
    return out;
  }
  const NoiseSmoothness s = noise.smoothness();

  const double u_head = std::min(cn, std::max({1.0, tuple.u0, s.u0}));
  // both builtin noise families have characteristic functions that decrease
  // away from zero, so the head minimum of |p*| sits at the right edge
  const double head = u_head * sup_head / noise.cf(u_head);

  double tail = 0.0;
  if (cn > u_head) {
    const bool exp_decay = tuple.r > 0.0 && tuple.b > 0.0;
    const double b = exp_decay ? tuple.b : 0.0;
    const double r = exp_decay ? tuple.r : 0.0;
    const double m = s.alpha - tuple.a;
    const auto phi = [&](double u) {
      return s.beta * std::pow(u, s.rho) - b * std::pow(u, r);
    };
    double phi_max = std::max(phi(u_head), phi(cn));
    if (b > 0.0 && s.beta > 0.0 && r > s.rho) {
      // growth wins first, decay later: one interior critical point
      const double uc = std::pow(s.beta * s.rho / (b * r), 1.0 / (r - s.rho));
      if (uc > u_head && uc < cn) phi_max = std::max(phi_max, phi(uc));
    }
    const double pow_int =
        m == -1.0 ? std::log(cn / u_head)
                  : (std::pow(cn, m + 1.0) - std::pow(u_head, m + 1.0)) / (m + 1.0);
    // (1+u)^alpha vs u^alpha costs at most 2^{alpha/2} above u = 1
    const double prefactor =
        tuple.L_hi * std::pow(2.0, 0.5 * s.alpha) / s.c_lo;
    tail = prefactor * std::exp(phi_max) * pow_int;
  }

  out.rhs = 2.0 * (head + tail);
  out.lhs = 2.0 * integrate(
                      [&](double u) {
                        return std::abs(transform(u)) * deconv_weight(noise, u);
                      },
                      0.0, cn, spec);
  out.pass = out.lhs <= out.rhs * detail::tail_bound_slack;
  return out;
}

inline TailBoundCheck ratio_bound_check(const WeightedTarget& target,
                                        const NoiseModel& noise, double cn,
                                        const QuadratureSpec& spec = {}) {
  return ratio_bound_check(target.psi().transform, target.smoothness(),
                           target.l1(), noise, cn, spec);
}

}  // namespace eivreg
