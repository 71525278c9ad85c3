#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "eivreg/fourier.hpp"
#include "eivreg/kernel.hpp"
#include "eivreg/noise.hpp"
#include "eivreg/quadrature.hpp"

namespace eivreg {

inline constexpr double kCfFloor = 1e-300;

//! 1 / p_eps*(t) with the representable-floor guard.
inline double deconv_weight(const NoiseModel& noise, double t) {
  const double c = noise.cf(t);
  if (std::abs(c) < kCfFloor)
    throw NonvanishingViolation("noise cf vanished at t = " + std::to_string(t));
  return 1.0 / c;
}

//! Deconvolving kernel value
//!   K_{n,Cn}(x) = (2 pi)^-1 integral K*(t/Cn)/p_eps*(t) exp(-itx) dt
//! by adaptive quadrature over the window support [-S*Cn, S*Cn].
inline double deconv_kernel_value(const KernelSpec& kernel, const NoiseModel& noise,
                                  double cn, double x,
                                  const QuadratureSpec& spec = {}) {
  if (!(cn > 0.0)) throw InvariantViolation("bandwidth must be positive");
  const double band = kernel.support() * cn;
  const auto integrand = [&](double t) {
    return kernel.ft(t / cn) * deconv_weight(noise, t) *
           std::exp(Complex(0.0, -t * x)) / (2.0 * M_PI);
  };
  return integrate_real(integrand, -band, band, spec, x);
}

//! Total mass of the deconvolving kernel.  The spectral window is 1 at the
//! origin, so the principal-value mass equals K*(0)/p_eps*(0); evaluated
//! through the same guarded accessors as the kernel values.
inline double deconv_kernel_mass(const KernelSpec& kernel, const NoiseModel& noise,
                                 double cn) {
  if (!(cn > 0.0)) throw InvariantViolation("bandwidth must be positive");
  kernel.validate();
  const double p0 = noise.cf(0.0);
  if (std::abs(p0 - 1.0) > 1e-12)
    throw InvariantViolation("noise cf must equal 1 at the origin");
  return kernel.ft(0.0) * deconv_weight(noise, 0.0);
}

//! Smoothed functional (psi * K_{n,Cn})(z) evaluated in the Fourier domain:
//!   (2 pi)^-1 integral psi*(u) K*(u/Cn)/p_eps*(u) exp(-iuz) du.
inline double smoothed_functional(const std::function<Complex(double)>& psi_ft,
                                  const KernelSpec& kernel, const NoiseModel& noise,
                                  double cn, double z,
                                  const QuadratureSpec& spec = {}) {
  if (!(cn > 0.0)) throw InvariantViolation("bandwidth must be positive");
  const double band = kernel.support() * cn;
  const auto integrand = [&](double u) {
    return psi_ft(u) * kernel.ft(u / cn) * deconv_weight(noise, u) *
           std::exp(Complex(0.0, -u * z)) / (2.0 * M_PI);
  };
  return integrate_real(integrand, -band, band, spec, z);
}

//! Same functional without the deconvolution factor: (psi * K_Cn)(x).
//! Used by the hidden-covariate side of the smoothing identity.
inline double smoothed_functional_plain(const std::function<Complex(double)>& psi_ft,
                                        const KernelSpec& kernel, double cn, double x,
                                        const QuadratureSpec& spec = {}) {
  if (!(cn > 0.0)) throw InvariantViolation("bandwidth must be positive");
  const double band = kernel.support() * cn;
  const auto integrand = [&](double u) {
    return psi_ft(u) * kernel.ft(u / cn) * std::exp(Complex(0.0, -u * x)) /
           (2.0 * M_PI);
  };
  return integrate_real(integrand, -band, band, spec, x);
}

//! Fixed frequency grid on [lo, hi]: composite Gauss-Legendre nodes with the
//! oscillation-guard panel width for phases up to exp(-iu z_max).
struct FreqGrid {
  std::vector<double> node;
  std::vector<double> weight;
};

inline FreqGrid frequency_grid(double lo, double hi, double osc_scale,
                               int order = 16, int refine = 0) {
  FreqGrid g;
  if (!(lo < hi)) return g;
  QuadratureSpec spec;
  spec.panel_order = order;
  double width = oscillation_panel_width(osc_scale, spec);
  width /= static_cast<double>(1 << refine);
  const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
  const double h = (hi - lo) / panels;
  const auto& rule = detail::gauss_rule(order);
  g.node.reserve(static_cast<std::size_t>(panels) * rule.node.size());
  g.weight.reserve(g.node.capacity());
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    for (std::size_t i = 0; i < rule.node.size(); ++i) {
      g.node.push_back(mid + 0.5 * h * rule.node[i]);
      g.weight.push_back(rule.weight[i] * 0.5 * h);
    }
  }
  return g;
}

}  // namespace eivreg
