#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "eivreg/errors.hpp"

namespace eivreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

//! Parametric regression family: f(theta, x) with analytic first and second
//! derivatives in theta, a compact parameter box, and x-smoothness metadata.
//!
//! Families that are linear in theta expose the basis functions so the target
//! layer can tabulate one transform per basis product and reuse it for every
//! theta.  All evaluators are immutable and safe to call concurrently.
class RegressionFamily {
 public:
  //! f(x) = sum_{k=1}^{degree} theta_k x^k.
  static RegressionFamily polynomial(int degree) {
    if (degree < 1) throw InvariantViolation("polynomial degree must be >= 1");
    RegressionFamily f("polynomial", degree);
    f.value_ = [](const Vector& th, double x) {
      double s = 0.0, xp = 1.0;
      for (int k = 0; k < th.size(); ++k) {
        xp *= x;
        s += th[k] * xp;
      }
      return s;
    };
    f.basis_ = [degree](double x) {
      Vector b(degree);
      double xp = 1.0;
      for (int k = 0; k < degree; ++k) {
        xp *= x;
        b[k] = xp;
      }
      return b;
    };
    f.set_box(-10.0, 10.0);
    return f;
  }

  //! f(x) = exp(theta x).
  static RegressionFamily exponential() {
    RegressionFamily f("exponential", 1);
    f.value_ = [](const Vector& th, double x) { return std::exp(th[0] * x); };
    f.grad_ = [](const Vector& th, double x) {
      Vector g(1);
      g[0] = x * std::exp(th[0] * x);
      return g;
    };
    f.hess_ = [](const Vector& th, double x) {
      Matrix h(1, 1);
      h(0, 0) = x * x * std::exp(th[0] * x);
      return h;
    };
    f.set_box(-3.0, 3.0);
    return f;
  }

  //! f(x) = sum_{j=1}^{d} theta_j cos(j x).
  static RegressionFamily cosine_sum(int d) {
    if (d < 1) throw InvariantViolation("cosine sum needs d >= 1");
    RegressionFamily f("cosineSum", d);
    f.value_ = [](const Vector& th, double x) {
      double s = 0.0;
      for (int j = 0; j < th.size(); ++j) s += th[j] * std::cos((j + 1) * x);
      return s;
    };
    f.basis_ = [d](double x) {
      Vector b(d);
      for (int j = 0; j < d; ++j) b[j] = std::cos((j + 1) * x);
      return b;
    };
    f.set_box(-10.0, 10.0);
    return f;
  }

  //! f(x) = theta / (1 + x^2).
  static RegressionFamily cauchy() {
    RegressionFamily f("cauchy", 1);
    f.value_ = [](const Vector& th, double x) { return th[0] / (1.0 + x * x); };
    f.basis_ = [](double x) {
      Vector b(1);
      b[0] = 1.0 / (1.0 + x * x);
      return b;
    };
    f.set_box(-10.0, 10.0);
    return f;
  }

  //! f(x) = theta exp(-|x|/2); infinitely differentiable except at the origin.
  static RegressionFamily laplace_tent() {
    RegressionFamily f("laplaceTent", 1);
    f.value_ = [](const Vector& th, double x) {
      return th[0] * std::exp(-0.5 * std::abs(x));
    };
    f.basis_ = [](double x) {
      Vector b(1);
      b[0] = std::exp(-0.5 * std::abs(x));
      return b;
    };
    f.kinks_ = {0.0};
    f.set_box(-10.0, 10.0);
    return f;
  }

  //! f(x) = theta on [-1, 1], zero outside.
  static RegressionFamily indicator() {
    RegressionFamily f("indicator", 1);
    f.value_ = [](const Vector& th, double x) {
      return (x >= -1.0 && x <= 1.0) ? th[0] : 0.0;
    };
    f.basis_ = [](double x) {
      Vector b(1);
      b[0] = (x >= -1.0 && x <= 1.0) ? 1.0 : 0.0;
      return b;
    };
    f.kinks_ = {-1.0, 1.0};
    f.set_box(-10.0, 10.0);
    return f;
  }

  //! f(x) = theta_1 + theta_2 x + theta_3 (x-a)_+ + theta_4 |x-b|^3 with known
  //! break locations a < b.
  static RegressionFamily polygonal(double a, double b) {
    if (!(a < b)) throw InvariantViolation("polygonal breaks need a < b");
    RegressionFamily f("polygonal", 4);
    f.value_ = [a, b](const Vector& th, double x) {
      const double hinge = std::max(x - a, 0.0);
      const double cube = std::abs(x - b);
      return th[0] + th[1] * x + th[2] * hinge + th[3] * cube * cube * cube;
    };
    f.basis_ = [a, b](double x) {
      Vector v(4);
      const double cube = std::abs(x - b);
      v[0] = 1.0;
      v[1] = x;
      v[2] = std::max(x - a, 0.0);
      v[3] = cube * cube * cube;
      return v;
    };
    f.kinks_ = {a, b};
    f.set_box(-10.0, 10.0);
    return f;
  }

  //! f(x) = theta_1 / (1 + theta_2 exp(theta_3 x)), theta_2 > 0.
  static RegressionFamily logistic3() {
    RegressionFamily f("logistic3", 3);
    f.value_ = [](const Vector& th, double x) {
      return th[0] / (1.0 + th[1] * std::exp(th[2] * x));
    };
    f.grad_ = [](const Vector& th, double x) {
      const double e = std::exp(th[2] * x);
      const double d = 1.0 + th[1] * e;
      Vector g(3);
      g[0] = 1.0 / d;
      g[1] = -th[0] * e / (d * d);
      g[2] = -th[0] * th[1] * x * e / (d * d);
      return g;
    };
    f.hess_ = [](const Vector& th, double x) {
      const double e = std::exp(th[2] * x);
      const double d = 1.0 + th[1] * e;
      const double d2 = d * d, d3 = d2 * d;
      Matrix h = Matrix::Zero(3, 3);
      h(0, 1) = -e / d2;
      h(0, 2) = -th[1] * x * e / d2;
      h(1, 1) = 2.0 * th[0] * e * e / d3;
      h(1, 2) = -th[0] * x * e * (1.0 - th[1] * e) / d3;
      h(2, 2) = -th[0] * th[1] * x * x * e * (1.0 - th[1] * e) / d3;
      h(1, 0) = h(0, 1);
      h(2, 0) = h(0, 2);
      h(2, 1) = h(1, 2);
      return h;
    };
    f.lo_ = Vector(3);
    f.hi_ = Vector(3);
    f.lo_ << -10.0, 0.05, -3.0;
    f.hi_ << 10.0, 20.0, 3.0;
    return f;
  }

  //! f(x) = theta_2 + (theta_1 - theta_2) / (1 + exp(theta_3 + theta_4 x)).
  static RegressionFamily logistic4() {
    RegressionFamily f("logistic4", 4);
    f.value_ = [](const Vector& th, double x) {
      return th[1] + (th[0] - th[1]) / (1.0 + std::exp(th[2] + th[3] * x));
    };
    f.grad_ = [](const Vector& th, double x) {
      const double e = std::exp(th[2] + th[3] * x);
      const double d = 1.0 + e;
      Vector g(4);
      g[0] = 1.0 / d;
      g[1] = e / d;
      g[2] = -(th[0] - th[1]) * e / (d * d);
      g[3] = -(th[0] - th[1]) * x * e / (d * d);
      return g;
    };
    f.hess_ = [](const Vector& th, double x) {
      const double e = std::exp(th[2] + th[3] * x);
      const double d = 1.0 + e;
      const double d2 = d * d, d3 = d2 * d;
      const double c = th[0] - th[1];
      Matrix h = Matrix::Zero(4, 4);
      h(0, 2) = -e / d2;
      h(0, 3) = -x * e / d2;
      h(1, 2) = e / d2;
      h(1, 3) = x * e / d2;
      h(2, 2) = -c * e * (1.0 - e) / d3;
      h(2, 3) = -c * x * e * (1.0 - e) / d3;
      h(3, 3) = -c * x * x * e * (1.0 - e) / d3;
      h(2, 0) = h(0, 2);
      h(3, 0) = h(0, 3);
      h(2, 1) = h(1, 2);
      h(3, 1) = h(1, 3);
      h(3, 2) = h(2, 3);
      return h;
    };
    f.lo_ = Vector(4);
    f.hi_ = Vector(4);
    f.lo_ << -10.0, -10.0, -5.0, -3.0;
    f.hi_ << 10.0, 10.0, 5.0, 3.0;
    return f;
  }

  //! f(x) = 1 / (1 + theta x^2), theta > 0.
  static RegressionFamily cauchy_theta() {
    RegressionFamily f("cauchyTheta", 1);
    f.value_ = [](const Vector& th, double x) {
      return 1.0 / (1.0 + th[0] * x * x);
    };
    f.grad_ = [](const Vector& th, double x) {
      const double d = 1.0 + th[0] * x * x;
      Vector g(1);
      g[0] = -x * x / (d * d);
      return g;
    };
    f.hess_ = [](const Vector& th, double x) {
      const double d = 1.0 + th[0] * x * x;
      Matrix h(1, 1);
      h(0, 0) = 2.0 * x * x * x * x / (d * d * d);
      return h;
    };
    f.lo_ = Vector::Constant(1, 0.05);
    f.hi_ = Vector::Constant(1, 20.0);
    return f;
  }

  const std::string& name() const { return name_; }
  int dimension() const { return dim_; }
  bool linear_in_theta() const { return static_cast<bool>(basis_); }

  //! x-locations where the family is not differentiable in x (theta-smoothness
  //! holds everywhere; these guide the weight pairing only).
  const std::vector<double>& x_kinks() const { return kinks_; }

  const Vector& box_lo() const { return lo_; }
  const Vector& box_hi() const { return hi_; }

  bool in_box(const Vector& theta) const {
    check_dimension(theta);
    for (int k = 0; k < dim_; ++k)
      if (theta[k] < lo_[k] || theta[k] > hi_[k]) return false;
    return true;
  }

  void check_dimension(const Vector& theta) const {
    if (theta.size() != dim_)
      throw DimensionMismatch(name_ + " expects " + std::to_string(dim_) +
                              " parameters, got " + std::to_string(theta.size()));
  }

  double value(const Vector& theta, double x) const {
    check_dimension(theta);
    return value_(theta, x);
  }

  Vector grad(const Vector& theta, double x) const {
    check_dimension(theta);
    if (basis_) return basis_(x);
    return grad_(theta, x);
  }

  Matrix hess(const Vector& theta, double x) const {
    check_dimension(theta);
    if (basis_) return Matrix::Zero(dim_, dim_);
    return hess_(theta, x);
  }

  //! Basis functions for linear families (f = theta . basis).
  Vector basis(double x) const {
    if (!basis_) throw InvariantViolation(name_ + " is not linear in theta");
    return basis_(x);
  }

  //! Directional third derivative d^3/dt^3 f(theta + t v, x) at t = 0 by
  //! central finite differences; the theory only needs it as a remainder
  //! bound, so a fallback suffices for every family.
  double third_directional(const Vector& theta, double x, const Vector& v) const {
    check_dimension(theta);
    check_dimension(v);
    const double scale = std::max(1.0, theta.norm());
    const double h = 1e-2 * scale / std::max(1.0, v.norm());
    const auto at = [&](double t) { return value_(theta + t * v, x); };
    return (at(2.0 * h) - 2.0 * at(h) + 2.0 * at(-h) - at(-2.0 * h)) /
           (2.0 * h * h * h);
  }

 private:
  RegressionFamily(std::string name, int dim) : name_(std::move(name)), dim_(dim) {}

  void set_box(double lo, double hi) {
    lo_ = Vector::Constant(dim_, lo);
    hi_ = Vector::Constant(dim_, hi);
  }

  std::string name_;
  int dim_;
  std::function<double(const Vector&, double)> value_;
  std::function<Vector(const Vector&, double)> grad_;  // nonlinear families
  std::function<Matrix(const Vector&, double)> hess_;  // nonlinear families
  std::function<Vector(double)> basis_;                // linear families
  std::vector<double> kinks_;
  Vector lo_, hi_;
};

}  // namespace eivreg
