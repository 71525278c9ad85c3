#pragma once

#include <cmath>
#include <string>

#include "eivreg/errors.hpp"
#include "eivreg/rng.hpp"

namespace eivreg {

//! Envelope constants for the measurement-noise characteristic function:
//! c_lo <= |p_eps*(u)| |u|^alpha exp(beta |u|^rho) <= c_hi for |u| >= u0.
//! rho = 0 is the polynomial-decay (ordinary smooth) regime and forces
//! beta = 0; rho > 0 is the exponential-decay (super smooth) regime.
struct NoiseSmoothness {
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  double u0 = 1.0;
  double c_lo = 1.0;
  double c_hi = 1.0;
};

//! Distribution of the covariate measurement error.  The characteristic
//! function is exact and real (all builtins are symmetric).
class NoiseModel {
 public:
  enum class Kind { gaussian, laplace_symmetric, degenerate };

  static NoiseModel gaussian(double sigma) {
    require_positive(sigma);
    return NoiseModel(Kind::gaussian, sigma);
  }
  //! Density (2 sigma)^-1 exp(-|x|/sigma); sigma is the scale parameter.
  static NoiseModel laplace_symmetric(double sigma) {
    require_positive(sigma);
    return NoiseModel(Kind::laplace_symmetric, sigma);
  }
  //! No measurement error (testing device; Z = X exactly).
  static NoiseModel degenerate() { return NoiseModel(Kind::degenerate, 0.0); }

  Kind kind() const { return kind_; }
  double sigma() const { return sigma_; }

  std::string name() const {
    switch (kind_) {
      case Kind::gaussian: return "gaussian";
      case Kind::laplace_symmetric: return "laplaceSymmetric";
      default: return "degenerate";
    }
  }

  double cf(double t) const {
    switch (kind_) {
      case Kind::gaussian: return std::exp(-0.5 * sigma_ * sigma_ * t * t);
      case Kind::laplace_symmetric: return 1.0 / (1.0 + sigma_ * sigma_ * t * t);
      default: return 1.0;
    }
  }

  double density(double x) const {
    switch (kind_) {
      case Kind::gaussian:
        return std::exp(-0.5 * x * x / (sigma_ * sigma_)) /
               (sigma_ * std::sqrt(2.0 * M_PI));
      case Kind::laplace_symmetric:
        return 0.5 / sigma_ * std::exp(-std::abs(x) / sigma_);
      default:
        throw InvariantViolation("degenerate noise has no density");
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

  //! log E exp(t * eps); MomentDiverges outside the domain.
  double cumulant(double t) const {
    switch (kind_) {
      case Kind::gaussian: return 0.5 * sigma_ * sigma_ * t * t;
      case Kind::laplace_symmetric: {
        const double s = sigma_ * t;
        if (std::abs(s) >= 1.0)
          throw MomentDiverges("laplace MGF needs |t * sigma| < 1, got " +
                               std::to_string(s));
        return -std::log(1.0 - s * s);
      }
      default: return 0.0;
    }
  }

  double cumulant_d1(double t) const {
    switch (kind_) {
      case Kind::gaussian: return sigma_ * sigma_ * t;
      case Kind::laplace_symmetric: {
        const double s2 = sigma_ * sigma_;
        const double d = 1.0 - s2 * t * t;
        if (d <= 0.0) throw MomentDiverges("laplace MGF domain");
        return 2.0 * s2 * t / d;
      }
      default: return 0.0;
    }
  }

  double cumulant_d2(double t) const {
    switch (kind_) {
      case Kind::gaussian: return sigma_ * sigma_;
      case Kind::laplace_symmetric: {
        const double s2 = sigma_ * sigma_;
        const double d = 1.0 - s2 * t * t;
        if (d <= 0.0) throw MomentDiverges("laplace MGF domain");
        return 2.0 * s2 * (1.0 + s2 * t * t) / (d * d);
      }
      default: return 0.0;
    }
  }

  NoiseSmoothness smoothness() const {
    NoiseSmoothness s;
    switch (kind_) {
      case Kind::gaussian:
        s.alpha = 0.0;
        s.beta = 0.5 * sigma_ * sigma_;
        s.rho = 2.0;
        s.u0 = 1.0;
        s.c_lo = 1.0 - 1e-12;  // envelope is exact; slack absorbs rounding
        s.c_hi = 1.0 + 1e-12;
        break;
      case Kind::laplace_symmetric: {
        // |p*(u)| (1+u^2) = (1+u^2)/(1+sigma^2 u^2) is monotone between its
        // value 1 at zero and its limit 1/sigma^2 at infinity
        const double inv = 1.0 / (sigma_ * sigma_);
        s.alpha = 2.0;
        s.beta = 0.0;
        s.rho = 0.0;
        s.u0 = 1.0;
        s.c_lo = std::min(1.0, inv) * (1.0 - 1e-12);
        s.c_hi = std::max(1.0, inv) * (1.0 + 1e-12);
        break;
      }
      default:
        break;  // cf identically 1: alpha = beta = rho = 0, c_lo = c_hi = 1
    }
    return s;
  }

 private:
  NoiseModel(Kind k, double sigma) : kind_(k), sigma_(sigma) {}
  static void require_positive(double sigma) {
    if (!(sigma > 0.0)) throw InvariantViolation("noise sigma must be positive");
  }

  Kind kind_;
  double sigma_;
};

}  // namespace eivreg
