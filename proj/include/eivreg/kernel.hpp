#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "eivreg/errors.hpp"

namespace eivreg {

//! Spectral smoothing window.  Admissibility: K*(0) = 1 and
//! |1 - K*(t)| <= 1_{|t| >= 1}, i.e. K* is exactly 1 on (-1, 1) and bounded
//! by [0, 2] on a compact support beyond.
class KernelSpec {
 public:
  enum class Kind { sinc, flat_top, custom };

  //! K*(t) = 1_{|t| <= 1}; the kernel itself is sin(x)/(pi x).
  static KernelSpec sinc() {
    KernelSpec k;
    k.kind_ = Kind::sinc;
    k.support_ = 1.0;
    k.ft_ = [](double t) { return std::abs(t) <= 1.0 ? 1.0 : 0.0; };
    return k;
  }

  //! Indicator core with a raised-cosine taper from 1 down to 0 on
  //! 1 <= |t| <= s.
  static KernelSpec flat_top(double s = 2.0) {
    if (!(s > 1.0)) throw InvariantViolation("flat_top kernel needs s > 1");
    KernelSpec k;
    k.kind_ = Kind::flat_top;
    k.support_ = s;
    k.ft_ = [s](double t) {
      const double a = std::abs(t);
      if (a <= 1.0) return 1.0;
      if (a >= s) return 0.0;
      return 0.5 * (1.0 + std::cos(M_PI * (a - 1.0) / (s - 1.0)));
    };
    return k;
  }

  static KernelSpec custom(std::function<double(double)> ft, double support) {
    KernelSpec k;
    k.kind_ = Kind::custom;
    k.support_ = support;
    k.ft_ = std::move(ft);
    k.validate();
    return k;
  }

  Kind kind() const { return kind_; }
  double ft(double t) const { return ft_(t); }
  double support() const { return support_; }

  //! Grid check of the admissibility constraints; InvariantViolation on miss.
  void validate() const {
    if (std::abs(ft_(0.0) - 1.0) > 1e-12)
      throw InvariantViolation("kernel window must satisfy K*(0) = 1");
    const int grid = 4096;
    for (int i = 0; i <= grid; ++i) {
      const double t = -1.5 * support_ + 3.0 * support_ * i / grid;
      const double v = ft_(t);
      if (std::abs(t) < 1.0 - 1e-9 && std::abs(1.0 - v) > 1e-12)
        throw InvariantViolation("kernel window must equal 1 on (-1, 1)");
      if (std::abs(1.0 - v) > 1.0 + 1e-12)
        throw InvariantViolation("kernel window violates |1 - K*| <= 1");
      if (std::abs(t) > support_ + 1e-9 && v != 0.0)
        throw InvariantViolation("kernel window leaks outside its support");
    }
  }

 private:
  Kind kind_ = Kind::sinc;
  double support_ = 1.0;
  std::function<double(double)> ft_;
};

//! Bandwidth carrier: either a manual value or a named growth rule resolved
//! against the smoothness tuple at estimation time.
struct Bandwidth {
  enum class Rule { manual, ordinary_smooth_rate, super_smooth_rate, root_n_log };
  Rule rule = Rule::manual;
  double value = 1.0;  // used when rule == manual
};

}  // namespace eivreg
