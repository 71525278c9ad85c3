#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eivreg/envelopes.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/noise.hpp"
#include "eivreg/quadrature.hpp"
#include "eivreg/regression.hpp"
#include "eivreg/targets.hpp"
#include "eivreg/weights.hpp"

namespace eivreg {

//! The three correction functions Phi_1, Phi_2, Phi_3 that make the direct
//! (kernel-free) criterion unbiased for the hidden-covariate objective:
//!   E[Phi_j(Z) | X] = w(X) f_theta(X)^{3-j},   j = 1, 2, 3.
//!
//! Three constructions are supported.
//!  - exponential(): closed forms for f_theta(x) = exp(theta x) through the
//!    noise cumulant, with w = 1.
//!  - cosine(): trigonometric closed forms for cosine-sum regression
//!    functions through the noise characteristic function at integer
//!    frequencies, with w = 1.
//!  - fourier_ratio(): generic construction inverting psi* / p_eps* for the
//!    weighted targets psi = w f^p; requires the ratio to be integrable.
//!
//! All outputs are real valued; theta-derivatives are available to order two.
class PhiTriple {
 public:
  enum class Source { exponential, cosine, fourier_ratio };

  //! Closed forms for the exponential family: Phi_2(z) = e^{theta z} /
  //! E e^{theta eps}, Phi_1(z) = e^{2 theta z} / E e^{2 theta eps},
  //! Phi_3 = 1.  Throws MomentDiverges when the noise moment generating
  //! function is infinite at theta (or 2 theta).
  static PhiTriple exponential(NoiseModel noise) {
    PhiTriple p(Source::exponential, std::move(noise), 1);
    return p;
  }

  //! Closed forms for cosine-sum regression f_theta(x) =
  //! sum_j theta_j cos(j x): harmonics divided by the noise characteristic
  //! function at the integer frequencies up to 2 * terms.  Throws
  //! NonvanishingViolation if the characteristic function vanishes there.
  static PhiTriple cosine(NoiseModel noise, int terms) {
    if (terms < 1) throw InvariantViolation("cosine Phi needs at least one term");
    PhiTriple p(Source::cosine, std::move(noise), terms);
    for (int m = 1; m <= 2 * terms; ++m) p.cf_at_integer(m);
    return p;
  }

  //! Generic construction: Phi_j is the inverse Fourier transform of
  //! psi_{3-j}* / p_eps* where psi_p = w f^p.  Values are computed by
  //! quadrature over the truncated frequency range chosen from the envelope
  //! of the ratio.  Throws RatioNotIntegrable when any needed ratio fails
  //! the integrability classification.
  static PhiTriple fourier_ratio(WeightSpec w, RegressionFamily f,
                                 NoiseModel noise,
                                 TargetBuildOptions opts = {}) {
    PhiTriple p(Source::fourier_ratio, std::move(noise), f.dimension());
    p.bundle_.emplace(std::move(w), std::move(f), opts);
    return p;
  }

  Source source() const { return source_; }
  int dimension() const { return d_; }
  const NoiseModel& noise() const { return noise_; }

  //! Target bundle behind the ratio construction.
  const TargetBundle& bundle() const {
    if (!bundle_)
      throw InvariantViolation("closed-form Phi carries no target bundle");
    return *bundle_;
  }

  //! Phi bound to one theta.  For the ratio construction this builds the
  //! three weighted targets once and reuses them across z and j.
  class AtTheta {
   public:
    double value(int j, double z) const { return owner_->phi_value(*this, j, z); }
    Vector grad(int j, double z) const { return owner_->phi_grad(*this, j, z); }
    Matrix hess(int j, double z) const { return owner_->phi_hess(*this, j, z); }
    const Vector& theta() const { return theta_; }

    //! Weighted target psi_p at the bound theta (ratio construction only).
    const WeightedTarget& target(int p) const {
      if (targets_.empty())
        throw InvariantViolation("closed-form Phi carries no weighted targets");
      return targets_.at(static_cast<std::size_t>(p));
    }

   private:
    friend class PhiTriple;
    const PhiTriple* owner_ = nullptr;
    Vector theta_;
    std::vector<WeightedTarget> targets_;  // psi_0, psi_1, psi_2 (ratio only)
    std::vector<double> cutoff_;           // frequency truncation per power
  };

  AtTheta at(const Vector& theta) const {
    check_theta(theta);
    AtTheta bound;
    bound.owner_ = this;
    bound.theta_ = theta;
    if (source_ == Source::fourier_ratio) {
      const auto s = noise_.smoothness();
      for (int p = 0; p < 3; ++p) {
        bound.targets_.push_back(bundle_->build(p, theta));
        const auto& t = bound.targets_.back().smoothness();
        require_ratio_integrable(t, s, "psi_" + std::to_string(p));
        bound.cutoff_.push_back(ratio_cutoff(t, s));
      }
    }
    return bound;
  }

  double value(int j, const Vector& theta, double z) const {
    return at(theta).value(j, z);
  }
  Vector grad(int j, const Vector& theta, double z) const {
    return at(theta).grad(j, z);
  }
  Matrix hess(int j, const Vector& theta, double z) const {
    return at(theta).hess(j, z);
  }

 private:
  PhiTriple(Source s, NoiseModel noise, int d)
      : source_(s), d_(d), noise_(std::move(noise)) {}

  void check_theta(const Vector& theta) const {
    if (theta.size() != d_)
      throw DimensionMismatch("Phi expects a parameter of dimension " +
                              std::to_string(d_));
  }

  static void check_index(int j) {
    if (j < 1 || j > 3) throw InvariantViolation("Phi index must be 1, 2, or 3");
  }

  double cf_at_integer(int m) const {
    const double c = noise_.cf(static_cast<double>(m));
    if (std::abs(c) < kPhiCfFloor)
      throw NonvanishingViolation(
          "noise characteristic function vanishes at integer frequency " +
          std::to_string(m));
    return c;
  }

  // cos(m z) / p_eps*(m); the harmonic building block of the cosine forms
  double harmonic(int m, double z) const {
    if (m == 0) return 1.0;
    return std::cos(m * z) / cf_at_integer(std::abs(m));
  }

  double phi_value(const AtTheta& b, int j, double z) const {
    check_index(j);
    switch (source_) {
      case Source::exponential: {
        if (j == 3) return 1.0;
        const double t = b.theta_[0];
        if (j == 2) return std::exp(t * z - noise_.cumulant(t));
        return std::exp(2.0 * t * z - noise_.cumulant(2.0 * t));
      }
      case Source::cosine: {
        if (j == 3) return 1.0;
        const Vector& th = b.theta_;
        if (j == 2) {
          double acc = 0.0;
          for (int k = 0; k < d_; ++k) acc += th[k] * harmonic(k + 1, z);
          return acc;
        }
        double acc = 0.0;
        for (int k = 0; k < d_; ++k) {
          acc += 0.5 * th[k] * th[k] * (1.0 + harmonic(2 * (k + 1), z));
          for (int l = k + 1; l < d_; ++l)
            acc += th[k] * th[l] *
                   (harmonic(k + l + 2, z) + harmonic(l - k, z));
        }
        return acc;
      }
      case Source::fourier_ratio:
        return ratio_invert(b.target(3 - j).psi(),
                            b.target(3 - j).smoothness(),
                            b.cutoff_[static_cast<std::size_t>(3 - j)], z);
    }
    return 0.0;
  }

  Vector phi_grad(const AtTheta& b, int j, double z) const {
    check_index(j);
    Vector g = Vector::Zero(d_);
    switch (source_) {
      case Source::exponential: {
        if (j == 3) return g;
        const double t = b.theta_[0];
        if (j == 2)
          g[0] = (z - noise_.cumulant_d1(t)) * phi_value(b, 2, z);
        else
          g[0] = 2.0 * (z - noise_.cumulant_d1(2.0 * t)) * phi_value(b, 1, z);
        return g;
      }
      case Source::cosine: {
        if (j == 3) return g;
        const Vector& th = b.theta_;
        if (j == 2) {
          for (int k = 0; k < d_; ++k) g[k] = harmonic(k + 1, z);
          return g;
        }
        for (int k = 0; k < d_; ++k) {
          g[k] = th[k] * (1.0 + harmonic(2 * (k + 1), z));
          for (int l = 0; l < d_; ++l)
            if (l != k)
              g[k] += th[l] * (harmonic(k + l + 2, z) +
                               harmonic(std::abs(l - k), z));
        }
        return g;
      }
      case Source::fourier_ratio: {
        const auto& tgt = b.target(3 - j);
        const auto s = noise_.smoothness();
        for (int k = 0; k < d_; ++k) {
          const auto& t = tgt.grad_smoothness(k);
          if (t.zero) continue;  // vanishing component, nothing to invert
          require_ratio_integrable(t, s, "grad psi_" + std::to_string(3 - j));
          g[k] = ratio_invert(tgt.grad(k), t, ratio_cutoff(t, s), z);
        }
        return g;
      }
    }
    return g;
  }

  Matrix phi_hess(const AtTheta& b, int j, double z) const {
    check_index(j);
    Matrix h = Matrix::Zero(d_, d_);
    switch (source_) {
      case Source::exponential: {
        if (j == 3) return h;
        const double t = b.theta_[0];
        if (j == 2) {
          const double s = z - noise_.cumulant_d1(t);
          h(0, 0) = (s * s - noise_.cumulant_d2(t)) * phi_value(b, 2, z);
        } else {
          const double s = 2.0 * (z - noise_.cumulant_d1(2.0 * t));
          h(0, 0) = (s * s - 4.0 * noise_.cumulant_d2(2.0 * t)) *
                    phi_value(b, 1, z);
        }
        return h;
      }
      case Source::cosine: {
        if (j != 1) return h;
        for (int k = 0; k < d_; ++k) {
          h(k, k) = 1.0 + harmonic(2 * (k + 1), z);
          for (int l = k + 1; l < d_; ++l) {
            h(k, l) = harmonic(k + l + 2, z) + harmonic(l - k, z);
            h(l, k) = h(k, l);
          }
        }
        return h;
      }
      case Source::fourier_ratio: {
        const auto& tgt = b.target(3 - j);
        const auto s = noise_.smoothness();
        for (int k = 0; k < d_; ++k)
          for (int l = k; l < d_; ++l) {
            const auto& tf = tgt.hess(k, l);
            // hessian envelopes are not cached per component; fit on demand
            const R1Tuple t = hess_tuple(tf, tgt);
            if (t.zero) continue;  // vanishing component, nothing to invert
            require_ratio_integrable(t, s, "hess psi_" + std::to_string(3 - j));
            h(k, l) = ratio_invert(tf, t, ratio_cutoff(t, s), z);
            h(l, k) = h(k, l);
          }
        return h;
      }
    }
    return h;
  }

  R1Tuple hess_tuple(const TargetFunctions& tf, const WeightedTarget& tgt) const {
    const double probe = std::abs(tf.transform(0.5).real()) +
                         std::abs(tf.transform(1.5).real()) +
                         std::abs(tf.transform(3.0).imag());
    if (!(probe > 0.0) && std::abs(tf.transform(0.0)) == 0.0)
      return detail::zero_r1();
    // anchor the fit window on the scalar envelope, clipped to the range the
    // tabulated transforms cover
    const auto& base = tgt.smoothness();
    const double hi = std::min(bundle_->options().u_max, 100.0);
    const double lo = std::min(std::max(1.0, base.u0), 0.25 * hi);
    return fit_r1_tuple(tf.transform, lo, hi);
  }

  //! (1/pi) Re int_0^U psi*(u)/p*(u) e^{-iuz} du.
  double ratio_invert(const TargetFunctions& tf, const R1Tuple& t, double cut,
                      double z) const {
    if (t.zero) return 0.0;
    const auto integrand = [&](double u) {
      const double c = noise_.cf(u);
      if (std::abs(c) < kPhiCfFloor)
        throw NonvanishingViolation("noise cf vanished at u = " +
                                    std::to_string(u));
      return tf.transform(u) / c * std::exp(Complex(0.0, -u * z));
    };
    const Complex v = integrate(integrand, 0.0, cut, quad_, z);
    return v.real() / M_PI;
  }

  static constexpr double kPhiCfFloor = 1e-300;

  Source source_;
  int d_;
  NoiseModel noise_;
  std::optional<TargetBundle> bundle_;  // fourier_ratio only
  QuadratureSpec quad_ = {};
};

}  // namespace eivreg
