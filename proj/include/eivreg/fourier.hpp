#pragma once

//! Fourier convention used throughout the library:
//!
//!   forward   g*(u) = integral exp(+i u x) g(x) dx
//!   inverse   g(x)  = (2 pi)^-1 integral exp(-i u x) g*(u) du
//!
//! Characteristic functions, kernel windows, and all tabulated transforms
//! follow this pair.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "eivreg/errors.hpp"
#include "eivreg/quadrature.hpp"

namespace eivreg {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Symbolic layer: finite sums  sum_k c_k x^{m_k} exp(a_k x)  with an optional
// shared Gaussian damping exp(-x^2 / (4 beta)).  Closed under products and
// parameter differentiation for every analytic weight/family pairing, and the
// Fourier transform of each damped term is a tilted-Gaussian moment in closed
// form.
// ---------------------------------------------------------------------------

struct ExpPolyTerm {
  Complex coef;
  int xpow = 0;
  Complex rate;  // exp(rate * x)
};

class ExpPoly {
 public:
  ExpPoly() = default;
  explicit ExpPoly(std::vector<ExpPolyTerm> terms) : terms_(std::move(terms)) {
    merge();
  }

  static ExpPoly constant(Complex c) { return ExpPoly({{c, 0, Complex(0.0)}}); }
  static ExpPoly monomial(Complex c, int xpow, Complex rate) {
    return ExpPoly({{c, xpow, rate}});
  }

  const std::vector<ExpPolyTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  Complex evaluate(double x) const {
    Complex s = 0.0;
    for (const auto& t : terms_)
      s += t.coef * std::pow(x, t.xpow) * std::exp(t.rate * x);
    return s;
  }

  ExpPoly operator+(const ExpPoly& o) const {
    std::vector<ExpPolyTerm> all = terms_;
    all.insert(all.end(), o.terms_.begin(), o.terms_.end());
    return ExpPoly(std::move(all));
  }

  ExpPoly operator*(const ExpPoly& o) const {
    std::vector<ExpPolyTerm> prod;
    prod.reserve(terms_.size() * o.terms_.size());
    for (const auto& a : terms_)
      for (const auto& b : o.terms_)
        prod.push_back({a.coef * b.coef, a.xpow + b.xpow, a.rate + b.rate});
    return ExpPoly(std::move(prod));
  }

  ExpPoly scaled(Complex c) const {
    std::vector<ExpPolyTerm> out = terms_;
    for (auto& t : out) t.coef *= c;
    return ExpPoly(std::move(out));
  }

  //! sum_k c_k * (d/dx applied to the rate parameter): multiply each term by x.
  ExpPoly times_x() const {
    std::vector<ExpPolyTerm> out = terms_;
    for (auto& t : out) t.xpow += 1;
    return ExpPoly(std::move(out));
  }

  //! Integer power by repeated multiplication (small exponents only).
  ExpPoly pow(int k) const {
    ExpPoly acc = ExpPoly::constant(1.0);
    for (int i = 0; i < k; ++i) acc = acc * (*this);
    return acc;
  }

  int max_power() const {
    int m = 0;
    for (const auto& t : terms_) m = std::max(m, t.xpow);
    return m;
  }

 private:
  void merge() {
    std::map<std::pair<int, std::pair<double, double>>, Complex> acc;
    for (const auto& t : terms_)
      acc[{t.xpow, {t.rate.real(), t.rate.imag()}}] += t.coef;
    terms_.clear();
    for (const auto& [key, c] : acc) {
      if (std::abs(c) == 0.0) continue;
      terms_.push_back({c, key.first, Complex(key.second.first, key.second.second)});
    }
  }

  std::vector<ExpPolyTerm> terms_;
};

namespace detail {

inline double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
  return r;
}

inline double double_factorial_odd(int j) {  // (2j-1)!!
  double r = 1.0;
  for (int i = 1; i <= j; ++i) r *= 2 * i - 1;
  return r;
}

//! integral x^m exp(zeta x) exp(-x^2/(4 beta)) dx, zeta complex.
inline Complex tilted_gauss_moment(int m, Complex zeta, double beta) {
  Complex sum = 0.0;
  for (int j = 0; 2 * j <= m; ++j) {
    sum += binom(m, 2 * j) * double_factorial_odd(j) * std::pow(2.0 * beta, j) *
           std::pow(2.0 * beta * zeta, m - 2 * j);
  }
  return 2.0 * std::sqrt(M_PI * beta) * std::exp(beta * zeta * zeta) * sum;
}

}  // namespace detail

//! exp(-x^2/(4 beta)) times an ExpPoly; the analytic representation of every
//! Gaussian-damped weighted target.
class GaussExpPoly {
 public:
  GaussExpPoly() = default;
  GaussExpPoly(double beta, ExpPoly poly) : beta_(beta), poly_(std::move(poly)) {
    if (!(beta_ > 0.0))
      throw InvariantViolation("GaussExpPoly: damping beta must be positive");
  }

  double beta() const { return beta_; }
  const ExpPoly& poly() const { return poly_; }

  double evaluate(double x) const {
    return (poly_.evaluate(x) * std::exp(-x * x / (4.0 * beta_))).real();
  }

  //! Forward transform under the library convention (+i u x in the kernel).
  Complex fourier(double u) const {
    Complex s = 0.0;
    for (const auto& t : poly_.terms())
      s += t.coef * detail::tilted_gauss_moment(t.xpow, t.rate + Complex(0.0, u), beta_);
    return s;
  }

  GaussExpPoly with_poly(ExpPoly p) const { return GaussExpPoly(beta_, std::move(p)); }

 private:
  double beta_ = 1.0;
  ExpPoly poly_;
};

// ---------------------------------------------------------------------------
// Numeric transforms: one quadrature sweep tabulates psi*(u) and its exact
// u-derivative on a uniform grid; queries interpolate with cubic Hermite
// polynomials.  Grid pitch comes from the Hermite error bound
//   du^4 * m4 / 384 <= tol * scale   with  m4 = integral x^4 |psi|,
// since every u-derivative of the transform is bounded by the matching
// absolute moment.
// ---------------------------------------------------------------------------

class TabulatedTransform {
 public:
  TabulatedTransform() = default;
  TabulatedTransform(double u_max, double du, std::vector<Complex> values,
                     std::vector<Complex> derivatives = {})
      : u_max_(u_max), du_(du), val_(std::move(values)), der_(std::move(derivatives)) {
    if (!der_.empty() && der_.size() != val_.size())
      throw InvariantViolation("tabulated transform: derivative grid mismatch");
  }

  bool valid() const { return !val_.empty(); }
  double u_max() const { return u_max_; }

  Complex operator()(double u) const {
    if (!valid()) throw MissingFourierTransform("transform not tabulated");
    if (std::abs(u) > u_max_ + 1e-12)
      throw MissingFourierTransform("frequency " + std::to_string(u) +
                                    " outside tabulated range " + std::to_string(u_max_));
    const double pos = std::min(std::max((u + u_max_) / du_, 0.0),
                                static_cast<double>(val_.size() - 1));
    const auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= val_.size()) return val_.back();
    const double t = pos - static_cast<double>(k);
    if (der_.empty()) return val_[k] * (1.0 - t) + val_[k + 1] * t;
    const double t2 = t * t, t3 = t2 * t;
    const Complex g0 = der_[k] * du_, g1 = der_[k + 1] * du_;
    return val_[k] * (2.0 * t3 - 3.0 * t2 + 1.0) + g0 * (t3 - 2.0 * t2 + t) +
           val_[k + 1] * (3.0 * t2 - 2.0 * t3) + g1 * (t3 - t2);
  }

 private:
  double u_max_ = 0.0;
  double du_ = 1.0;
  std::vector<Complex> val_;
  std::vector<Complex> der_;
};

//! Tabulates integral exp(iux) f(x) dx over the support [lo, hi] for
//! |u| <= u_max.  The phase advances by complex multiplication per grid step,
//! so the sweep costs one exp per x node.
inline TabulatedTransform numeric_fourier_transform(
    const std::function<double(double)>& f, double lo, double hi, double u_max,
    double rel_tol = 1e-7, const QuadratureSpec& spec = {}) {
  if (!(lo < hi)) throw NotIntegrable("numeric_fourier_transform: empty support");
  const auto& rule = detail::gauss_rule(spec.panel_order);
  const double width = std::min(spec.max_panel_width, M_PI / std::max(1.0, u_max));
  const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
  const double h = (hi - lo) / panels;

  std::vector<double> xs, cw;  // nodes and f(x)*weight
  xs.reserve(static_cast<std::size_t>(panels) * rule.node.size());
  cw.reserve(xs.capacity());
  double l1 = 0.0, m4 = 0.0, mass = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    for (std::size_t i = 0; i < rule.node.size(); ++i) {
      const double x = mid + 0.5 * h * rule.node[i];
      const double c = f(x) * rule.weight[i] * 0.5 * h;
      xs.push_back(x);
      cw.push_back(c);
      l1 += std::abs(c);
      m4 += x * x * x * x * std::abs(c);
      mass += c;
    }
  }
  if (!(l1 > 0.0)) throw NotIntegrable("numeric_fourier_transform: zero mass");

  const double scale = std::max(std::abs(mass), 0.25 * l1);
  double du = std::pow(384.0 * rel_tol * scale / std::max(m4, 1e-300), 0.25);
  du = std::min(std::max(du, 1e-4), 0.05);
  const auto half = static_cast<std::size_t>(std::ceil(u_max / du));
  const std::size_t count = 2 * half + 1;
  du = u_max / static_cast<double>(half);

  std::vector<Complex> val(count, Complex(0.0));
  std::vector<Complex> der(count, Complex(0.0));
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double x = xs[k];
    const Complex step = std::exp(Complex(0.0, du * x));
    Complex phase = std::exp(Complex(0.0, -u_max * x));
    const double c = cw[k];
    const Complex cix(0.0, c * x);  // exact derivative weight d/du
    for (std::size_t j = 0; j < count; ++j) {
      val[j] += c * phase;
      der[j] += cix * phase;
      phase *= step;
    }
  }
  return TabulatedTransform(u_max, du, std::move(val), std::move(der));
}

//! Symmetric interval outside which |f| stays below tol * max|f|.
inline std::pair<double, double> effective_support(
    const std::function<double(double)>& f, double tol = 1e-12) {
  double L = 8.0;
  for (; L <= 4096.0; L *= 2.0) {
    const int grid = 2048;
    double peak = 0.0;
    for (int i = 0; i <= grid; ++i)
      peak = std::max(peak, std::abs(f(-L + 2.0 * L * i / grid)));
    if (!(peak > 0.0)) throw NotIntegrable("effective_support: function vanishes");
    const double cut = tol * peak;
    int lo = 0, hi = grid;
    while (lo < grid && std::abs(f(-L + 2.0 * L * lo / grid)) <= cut) ++lo;
    while (hi > 0 && std::abs(f(-L + 2.0 * L * hi / grid)) <= cut) --hi;
    const bool interior = lo > 0 && hi < grid;
    if (interior) {
      const double step = 2.0 * L / grid;
      return {-L + step * (lo - 1), -L + step * (hi + 1)};
    }
  }
  throw NotIntegrable("effective_support: no decay found out to |x| = 4096");
}

}  // namespace eivreg
