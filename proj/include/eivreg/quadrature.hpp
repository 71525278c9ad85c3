#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "eivreg/errors.hpp"

namespace eivreg {

//! Controls for the composite Gauss-Legendre integrator.
//!
//! Integrands with an oscillatory factor exp(-iuz) pass the oscillation
//! scale |z|; panels are pre-split to width min(maxPanelWidth, pi/|z|) so a
//! single panel never sees more than ~pi of phase.
struct QuadratureSpec {
  int panel_order = 16;        //!< Gauss-Legendre points per panel
  int max_depth = 12;          //!< halving rounds before QuadratureFailure
  double rel_tol = 1e-8;       //!< relative agreement between rounds
  double abs_tol = 1e-13;      //!< absolute floor for the agreement test
  double max_panel_width = 1.0;
  double imag_tol = 1e-6;      //!< residue tolerance for real-valued results
};

namespace detail {

struct GaussRule {
  std::vector<double> node;    // on [-1, 1]
  std::vector<double> weight;
};

//! Nodes/weights by Newton iteration on the Legendre recurrence.
inline GaussRule make_gauss_rule(int n) {
  GaussRule r;
  r.node.resize(n);
  r.weight.resize(n);
  for (int k = 0; k < (n + 1) / 2; ++k) {
    double x = std::cos(M_PI * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.node[k] = -x;
    r.node[n - 1 - k] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.weight[k] = w;
    r.weight[n - 1 - k] = w;
  }
  return r;
}

inline const GaussRule& gauss_rule(int n) {
  static std::mutex mu;
  static std::unordered_map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_rule(n)).first;
  return it->second;
}

template <class T>
double magnitude(const T& v) {
  return std::abs(v);
}

}  // namespace detail

//! Initial panel width for an integrand carrying exp(-iuz) factors.
inline double oscillation_panel_width(double z_scale, const QuadratureSpec& spec = {}) {
  double z = std::max(1.0, std::abs(z_scale));
  return std::min(spec.max_panel_width, M_PI / z);
}

//! Composite Gauss-Legendre pass over [a, b] with `panels` equal panels.
template <class F>
auto composite_pass(F&& f, double a, double b, int panels, int order)
    -> decltype(f(0.0)) {
  const auto& rule = detail::gauss_rule(order);
  using T = decltype(f(0.0));
  T total{};
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    const double half = 0.5 * h;
    T acc{};
    for (std::size_t i = 0; i < rule.node.size(); ++i)
      acc += rule.weight[i] * f(mid + half * rule.node[i]);
    total += acc * half;
  }
  return total;
}

//! Adaptive integral of f over [a, b]: panel count doubles until two
//! successive passes agree to rel_tol (or abs_tol for near-zero results).
//!
//! `osc_scale` is the largest |z| appearing in exp(-iuz) factors; 0 means
//! the integrand is smooth at unit scale.
template <class F>
auto integrate(F&& f, double a, double b, const QuadratureSpec& spec = {},
               double osc_scale = 0.0) -> decltype(f(0.0)) {
  using T = decltype(f(0.0));
  if (!(a < b)) return T{};
  const double width = oscillation_panel_width(osc_scale, spec);
  const double requested = std::ceil((b - a) / width);
  if (requested > 2e6)
    throw QuadratureFailure("integrate: " + std::to_string(requested) +
                            " panels requested; range too wide");
  int panels = std::max(1, static_cast<int>(requested));
  T prev = composite_pass(f, a, b, panels, spec.panel_order);
  for (int depth = 0; depth < spec.max_depth; ++depth) {
    panels *= 2;
    T cur = composite_pass(f, a, b, panels, spec.panel_order);
    const double diff = detail::magnitude<T>(cur - prev);
    if (diff <= std::max(spec.abs_tol, spec.rel_tol * detail::magnitude<T>(cur)))
      return cur;
    prev = cur;
  }
  throw QuadratureFailure("integrate: no convergence on [" + std::to_string(a) +
                          ", " + std::to_string(b) + "] after max_depth rounds");
}

//! Real part of a complex integral; throws if the imaginary residue exceeds
//! imag_tol * (1 + |real part|).
template <class F>
double integrate_real(F&& f, double a, double b, const QuadratureSpec& spec = {},
                      double osc_scale = 0.0) {
  const std::complex<double> v = integrate(f, a, b, spec, osc_scale);
  if (std::abs(v.imag()) > spec.imag_tol * (1.0 + std::abs(v.real())))
    throw QuadratureFailure("integrate_real: imaginary residue " +
                            std::to_string(v.imag()));
  return v.real();
}

//! Integral of f over [a, +inf): geometric blocks until two consecutive
//! blocks are negligible against the running total.  Intended for tails that
//! decay at least polynomially with exponent > 1; persistently non-decaying
//! blocks raise TailNotIntegrable.
template <class F>
auto integrate_to_infinity(F&& f, double a, const QuadratureSpec& spec = {},
                           double osc_scale = 0.0, double first_block = 1.0)
    -> decltype(f(0.0)) {
  using T = decltype(f(0.0));
  T total{};
  double lo = a;
  double len = std::max(first_block, 1e-6);
  int calm = 0;
  double prev_mag = -1.0;
  int stale = 0;
  for (int block = 0; block < 60; ++block) {
    const T piece = integrate(f, lo, lo + len, spec, osc_scale);
    total += piece;
    const double mag = detail::magnitude<T>(piece);
    const double floor =
        std::max(spec.abs_tol, 0.1 * spec.rel_tol * detail::magnitude<T>(total));
    if (mag <= floor) {
      if (++calm >= 2) return total;
    } else {
      calm = 0;
      // geometric blocks of an integrable tail shrink; flat or growing
      // blocks signal (at best) logarithmic divergence
      if (prev_mag >= 0.0 && mag >= 0.9 * prev_mag) {
        if (++stale >= 6)
          throw TailNotIntegrable("integrate_to_infinity: blocks not decaying");
      } else {
        stale = 0;
      }
    }
    prev_mag = mag;
    lo += len;
    len *= 2.0;
  }
  throw TailNotIntegrable("integrate_to_infinity: tail did not settle");
}

}  // namespace eivreg
