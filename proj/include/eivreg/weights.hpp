#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "eivreg/errors.hpp"
#include "eivreg/regression.hpp"

namespace eivreg {

//! One compactly supported bump factor: exp(-1/((x-a)(b-x))^R) on (a, b),
//! identically zero outside, infinitely differentiable everywhere.
struct BumpParams {
  double a;
  double b;
  double R;
};

inline double bump_value(const BumpParams& p, double x) {
  const double u = (x - p.a) * (p.b - x);
  if (!(u > 0.0)) return 0.0;
  return std::exp(-std::pow(u, -p.R));
}

//! Nonnegative weight function, either a fixed function of x or a function of
//! (x, theta) with analytic theta-derivatives.  Weights damp the regression
//! targets into L1 and control the decay of their Fourier transforms.
class WeightSpec {
 public:
  enum class Kind {
    constant_one,
    gaussian_damp,
    rational_gaussian,
    bump,
    power_smoother,
    sum_of_bumps,
    theta_dependent
  };

  static WeightSpec constant_one() {
    WeightSpec w(Kind::constant_one, "constantOne");
    w.fixed_ = [](double) { return 1.0; };
    return w;
  }

  //! w(x) = exp(-x^2 / (4 beta)).
  static WeightSpec gaussian_damp(double beta) {
    require_beta(beta);
    WeightSpec w(Kind::gaussian_damp, "gaussianDamp");
    w.beta_ = beta;
    w.fixed_ = [beta](double x) { return std::exp(-x * x / (4.0 * beta)); };
    return w;
  }

  //! w(x) = (1 + x^2)^m exp(-x^2 / (4 beta)).
  static WeightSpec rational_gaussian(int m, double beta) {
    require_beta(beta);
    if (m < 1) throw InvariantViolation("rational weight power must be >= 1");
    WeightSpec w(Kind::rational_gaussian, "rationalGaussian");
    w.beta_ = beta;
    w.rational_m_ = m;
    w.fixed_ = [m, beta](double x) {
      return std::pow(1.0 + x * x, m) * std::exp(-x * x / (4.0 * beta));
    };
    return w;
  }

  //! The bump above on [a, b] with sharpness R.
  static WeightSpec bump(double a, double b, double R) {
    WeightSpec w(Kind::bump, "bumpPsi");
    w.bumps_ = {check_bump({a, b, R})};
    const BumpParams p = w.bumps_.front();
    w.fixed_ = [p](double x) { return bump_value(p, x); };
    return w;
  }

  //! w(x) = exp(-|x|^{-2R}): smooths at the origin without compact support.
  static WeightSpec power_smoother(double R) {
    if (!(R > 0.0)) throw InvariantViolation("power smoother needs R > 0");
    WeightSpec w(Kind::power_smoother, "powerSmoother");
    w.smoother_R_ = R;
    w.fixed_ = [R](double x) {
      const double ax = std::abs(x);
      if (ax == 0.0) return 0.0;
      return std::exp(-std::pow(ax, -2.0 * R));
    };
    return w;
  }

  static WeightSpec sum_of_bumps(std::vector<BumpParams> bumps) {
    if (bumps.empty()) throw InvariantViolation("bump list must be nonempty");
    WeightSpec w(Kind::sum_of_bumps, "sumOfBumps");
    for (auto& b : bumps) w.bumps_.push_back(check_bump(b));
    auto list = w.bumps_;
    w.fixed_ = [list](double x) {
      double s = 0.0;
      for (const auto& b : list) s += bump_value(b, x);
      return s;
    };
    return w;
  }

  //! Match weight for the three-parameter logistic family:
  //! w_theta(x) = (1 + theta_2 exp(theta_3 x))^4 exp(-x^2/(4 beta)).
  static WeightSpec logistic3_match(double beta) {
    require_beta(beta);
    WeightSpec w(Kind::theta_dependent, "logistic3Match");
    w.beta_ = beta;
    w.theta_dim_ = 3;
    w.value_ = [beta](double x, const Vector& th) {
      const double d = 1.0 + th[1] * std::exp(th[2] * x);
      return d * d * d * d * gauss(x, beta);
    };
    w.grad_ = [beta](double x, const Vector& th) {
      const double e = std::exp(th[2] * x);
      const double d = 1.0 + th[1] * e;
      const double g = gauss(x, beta);
      Vector out = Vector::Zero(3);
      out[1] = 4.0 * d * d * d * e * g;
      out[2] = 4.0 * d * d * d * th[1] * x * e * g;
      return out;
    };
    w.hess_ = [beta](double x, const Vector& th) {
      const double e = std::exp(th[2] * x);
      const double d = 1.0 + th[1] * e;
      const double g = gauss(x, beta);
      const double d2 = d * d;
      Matrix out = Matrix::Zero(3, 3);
      out(1, 1) = 12.0 * d2 * e * e * g;
      out(1, 2) = 4.0 * d2 * x * e * (3.0 * th[1] * e + d) * g;
      out(2, 2) = 4.0 * d2 * th[1] * x * x * e * (3.0 * th[1] * e + d) * g;
      out(2, 1) = out(1, 2);
      return out;
    };
    return w;
  }

  //! Match weight for the four-parameter logistic family:
  //! w_theta(x) = (1 + exp(theta_3 + theta_4 x))^4 exp(-x^2/(4 beta)).
  static WeightSpec logistic4_match(double beta) {
    require_beta(beta);
    WeightSpec w(Kind::theta_dependent, "logistic4Match");
    w.beta_ = beta;
    w.theta_dim_ = 4;
    w.value_ = [beta](double x, const Vector& th) {
      const double d = 1.0 + std::exp(th[2] + th[3] * x);
      return d * d * d * d * gauss(x, beta);
    };
    w.grad_ = [beta](double x, const Vector& th) {
      const double e = std::exp(th[2] + th[3] * x);
      const double d = 1.0 + e;
      const double g = gauss(x, beta);
      Vector out = Vector::Zero(4);
      out[2] = 4.0 * d * d * d * e * g;
      out[3] = 4.0 * d * d * d * x * e * g;
      return out;
    };
    w.hess_ = [beta](double x, const Vector& th) {
      const double e = std::exp(th[2] + th[3] * x);
      const double d = 1.0 + e;
      const double g = gauss(x, beta);
      const double core = 4.0 * d * d * e * (3.0 * e + d) * g;
      Matrix out = Matrix::Zero(4, 4);
      out(2, 2) = core;
      out(2, 3) = x * core;
      out(3, 3) = x * x * core;
      out(3, 2) = out(2, 3);
      return out;
    };
    return w;
  }

  //! Match weight for the theta-in-denominator Cauchy family:
  //! w_theta(x) = (1 + theta x^2)^2 exp(-x^2/(4 beta)).
  static WeightSpec cauchy_theta_match(double beta) {
    require_beta(beta);
    WeightSpec w(Kind::theta_dependent, "cauchyThetaMatch");
    w.beta_ = beta;
    w.theta_dim_ = 1;
    w.value_ = [beta](double x, const Vector& th) {
      const double d = 1.0 + th[0] * x * x;
      return d * d * gauss(x, beta);
    };
    w.grad_ = [beta](double x, const Vector& th) {
      const double d = 1.0 + th[0] * x * x;
      Vector out(1);
      out[0] = 2.0 * d * x * x * gauss(x, beta);
      return out;
    };
    w.hess_ = [beta](double x, const Vector&) {
      Matrix out(1, 1);
      out(0, 0) = 2.0 * x * x * x * x * gauss(x, beta);
      return out;
    };
    return w;
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool theta_dependent() const { return kind_ == Kind::theta_dependent; }

  double beta() const { return beta_; }
  int rational_power() const { return rational_m_; }
  double smoother_sharpness() const { return smoother_R_; }
  const std::vector<BumpParams>& bumps() const { return bumps_; }

  //! Number of theta components a theta-dependent weight differentiates in;
  //! zero for fixed weights.
  int theta_dimension() const { return theta_dim_; }

  double value(double x) const {
    if (theta_dependent())
      throw InvariantViolation(name_ + " needs theta to evaluate");
    return fixed_(x);
  }

  double value(double x, const Vector& theta) const {
    if (!theta_dependent()) return fixed_(x);
    check_theta(theta);
    return value_(x, theta);
  }

  Vector grad_theta(double x, const Vector& theta) const {
    if (!theta_dependent()) return Vector::Zero(theta.size());
    check_theta(theta);
    return grad_(x, theta);
  }

  Matrix hess_theta(double x, const Vector& theta) const {
    if (!theta_dependent()) return Matrix::Zero(theta.size(), theta.size());
    check_theta(theta);
    return hess_(x, theta);
  }

 private:
  WeightSpec(Kind k, std::string name) : kind_(k), name_(std::move(name)) {}

  static double gauss(double x, double beta) {
    return std::exp(-x * x / (4.0 * beta));
  }
  static void require_beta(double beta) {
    if (!(beta > 0.0)) throw InvariantViolation("weight beta must be positive");
  }
  static BumpParams check_bump(BumpParams p) {
    if (!(p.a < p.b)) throw InvariantViolation("bump needs a < b");
    if (!(p.R > 0.0)) throw InvariantViolation("bump needs R > 0");
    return p;
  }
  void check_theta(const Vector& theta) const {
    if (theta.size() < theta_dim_)
      throw DimensionMismatch(name_ + " differentiates in " +
                              std::to_string(theta_dim_) +
                              " parameters, got theta of size " +
                              std::to_string(theta.size()));
  }

  Kind kind_;
  std::string name_;
  double beta_ = 1.0;
  int rational_m_ = 0;
  double smoother_R_ = 0.0;
  std::vector<BumpParams> bumps_;
  int theta_dim_ = 0;
  std::function<double(double)> fixed_;
  std::function<double(double, const Vector&)> value_;
  std::function<Vector(double, const Vector&)> grad_;
  std::function<Matrix(double, const Vector&)> hess_;
};

}  // namespace eivreg
