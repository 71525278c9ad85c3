#pragma once

#include <cmath>
#include <string>

#include "eivreg/errors.hpp"
#include "eivreg/rng.hpp"

namespace eivreg {

//! Distribution of the unobserved covariate.  Carries the density, an exact
//! sampler, and the closed-form moments the covariance machinery integrates
//! against.
class DesignDensity {
 public:
  enum class Kind { gaussian, uniform, gaussian_mixture };

  static DesignDensity gaussian(double mean, double sigma) {
    if (!(sigma > 0.0)) throw InvariantViolation("design sigma must be positive");
    DesignDensity d(Kind::gaussian);
    d.m1_ = mean;
    d.s1_ = sigma;
    return d;
  }

  static DesignDensity uniform(double a, double b) {
    if (!(a < b)) throw InvariantViolation("uniform design needs a < b");
    DesignDensity d(Kind::uniform);
    d.a_ = a;
    d.b_ = b;
    return d;
  }

  //! Two-component normal mixture: weight on the first component, then the
  //! two (mean, sigma) pairs.
  static DesignDensity gaussian_mixture(double w1, double m1, double s1,
                                        double m2, double s2) {
    if (!(w1 > 0.0 && w1 < 1.0))
      throw InvariantViolation("mixture weight must lie in (0, 1)");
    if (!(s1 > 0.0 && s2 > 0.0))
      throw InvariantViolation("mixture sigmas must be positive");
    DesignDensity d(Kind::gaussian_mixture);
    d.w1_ = w1;
    d.m1_ = m1;
    d.s1_ = s1;
    d.m2_ = m2;
    d.s2_ = s2;
    return d;
  }

  Kind kind() const { return kind_; }

  std::string name() const {
    switch (kind_) {
      case Kind::gaussian: return "gaussian";
      case Kind::uniform: return "uniform";
      default: return "gaussianMixture";
    }
  }

  double density(double x) const {
    switch (kind_) {
      case Kind::gaussian:
        return normal_pdf(x, m1_, s1_);
      case Kind::uniform:
        return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0;
      default:
        return w1_ * normal_pdf(x, m1_, s1_) + (1.0 - w1_) * normal_pdf(x, m2_, s2_);
    }
  }

  double sample(Rng& rng) const {
    switch (kind_) {
      case Kind::gaussian:
        return m1_ + s1_ * rng.normal();
      case Kind::uniform:
        return rng.uniform(a_, b_);
      default: {
        // Fixed draw order: component selector first, then the normal draw.
        const bool first = rng.uniform() < w1_;
        const double z = rng.normal();
        return first ? m1_ + s1_ * z : m2_ + s2_ * z;
      }
    }
  }

  double mean() const {
    switch (kind_) {
      case Kind::gaussian: return m1_;
      case Kind::uniform: return 0.5 * (a_ + b_);
      default: return w1_ * m1_ + (1.0 - w1_) * m2_;
    }
  }

  double variance() const {
    switch (kind_) {
      case Kind::gaussian:
        return s1_ * s1_;
      case Kind::uniform:
        return (b_ - a_) * (b_ - a_) / 12.0;
      default: {
        const double m = mean();
        const double e2 = w1_ * (s1_ * s1_ + m1_ * m1_) +
                          (1.0 - w1_) * (s2_ * s2_ + m2_ * m2_);
        return e2 - m * m;
      }
    }
  }

  //! Interval outside which the density is numerically negligible; quadrature
  //! over the design integrates here.
  double quad_lo() const {
    switch (kind_) {
      case Kind::gaussian: return m1_ - 10.0 * s1_;
      case Kind::uniform: return a_;
      default: return std::min(m1_ - 10.0 * s1_, m2_ - 10.0 * s2_);
    }
  }
  double quad_hi() const {
    switch (kind_) {
      case Kind::gaussian: return m1_ + 10.0 * s1_;
      case Kind::uniform: return b_;
      default: return std::max(m1_ + 10.0 * s1_, m2_ + 10.0 * s2_);
    }
  }

 private:
  explicit DesignDensity(Kind k) : kind_(k) {}

  static double normal_pdf(double x, double m, double s) {
    const double t = (x - m) / s;
    return std::exp(-0.5 * t * t) / (s * std::sqrt(2.0 * M_PI));
  }

  Kind kind_;
  double m1_ = 0.0, s1_ = 1.0;  // gaussian / first mixture component
  double m2_ = 0.0, s2_ = 1.0;  // second mixture component
  double w1_ = 1.0;             // mixture weight on the first component
  double a_ = -1.0, b_ = 1.0;   // uniform support
};

//! Distribution of the regression error.  Centered by construction; the
//! moments needed by the bias-corrected criteria and the variance displays
//! are exposed in closed form.
class XiModel {
 public:
  enum class Kind { gaussian, laplace_symmetric, zero };

  static XiModel gaussian(double sigma) {
    if (!(sigma > 0.0)) throw InvariantViolation("xi sigma must be positive");
    return XiModel(Kind::gaussian, sigma);
  }
  //! Density (2 sigma)^-1 exp(-|x|/sigma).
  static XiModel laplace_symmetric(double sigma) {
    if (!(sigma > 0.0)) throw InvariantViolation("xi sigma must be positive");
    return XiModel(Kind::laplace_symmetric, sigma);
  }
  //! No regression error (testing device).
  static XiModel zero() { return XiModel(Kind::zero, 0.0); }

  Kind kind() const { return kind_; }

  std::string name() const {
    switch (kind_) {
      case Kind::gaussian: return "gaussian";
      case Kind::laplace_symmetric: return "laplaceSymmetric";
      default: return "zero";
    }
  }

  double sample(Rng& rng) const {
    switch (kind_) {
      case Kind::gaussian: return sigma_ * rng.normal();
      case Kind::laplace_symmetric: return sigma_ * rng.laplace();
      default: return 0.0;
    }
  }

  double variance() const {
    switch (kind_) {
      case Kind::gaussian: return sigma_ * sigma_;
      case Kind::laplace_symmetric: return 2.0 * sigma_ * sigma_;
      default: return 0.0;
    }
  }

  double third_moment() const { return 0.0; }  // all builtins symmetric

  double fourth_moment() const {
    const double s2 = sigma_ * sigma_;
    switch (kind_) {
      case Kind::gaussian: return 3.0 * s2 * s2;
      case Kind::laplace_symmetric: return 24.0 * s2 * s2;
      default: return 0.0;
    }
  }

 private:
  XiModel(Kind k, double sigma) : kind_(k), sigma_(sigma) {}

  Kind kind_;
  double sigma_;
};

}  // namespace eivreg
