#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eivreg/errors.hpp"
#include "eivreg/fourier.hpp"
#include "eivreg/quadrature.hpp"
#include "eivreg/regression.hpp"
#include "eivreg/weights.hpp"

namespace eivreg {

//! Two-sided envelope of a Fourier transform on |u| >= u0:
//!   L_lo <= |psi*(u)| |u|^a exp(b |u|^r) <= L_hi.
//! r = 0 (with b = 0) is polynomial decay; r > 0 is exponential decay.  The
//! zero flag marks identically vanishing components, which impose no
//! constraint on rates or bandwidths.
struct R1Tuple {
  double a = 0.0;
  double b = 0.0;
  double r = 0.0;
  double L_lo = 0.0;
  double L_hi = 0.0;
  double u0 = 1.0;
  bool zero = false;
};

//! A weighted-target component: pointwise values and the Fourier transform,
//! with a flag telling whether the transform is closed form or tabulated.
struct TargetFunctions {
  std::function<double(double)> value;
  std::function<Complex(double)> transform;
  bool analytic = false;
};

struct TargetBuildOptions {
  double u_max = 64.0;             // tabulation range for numeric transforms
  double transform_rel_tol = 1e-7;
  double fit_u0 = 1.0;             // envelope fit window [fit_u0, min(u_max, 100)]
  QuadratureSpec quad = {};
};

//! Fits the envelope tuple from transform magnitudes on [u0, u1].  Block
//! maxima over log-spaced blocks make the fit insensitive to oscillation
//! zeros; the decay exponent r is searched on a coarse grid and an r > 0
//! model must beat the polynomial model decisively before it is accepted.
inline R1Tuple fit_r1_tuple(const std::function<Complex(double)>& tf, double u0,
                            double u1) {
  if (!(u0 > 0.0 && u1 > u0))
    throw InvariantViolation("envelope fit needs 0 < u0 < u1");
  const int blocks = 28, per_block = 12;
  std::vector<double> bu, by;  // block argmax and log block max
  const double lr = std::log(u1 / u0);
  for (int k = 0; k < blocks; ++k) {
    double best = 0.0, at = 0.0;
    for (int i = 0; i < per_block; ++i) {
      const double t = (k + (i + 0.5) / per_block) / blocks;
      const double u = u0 * std::exp(lr * t);
      const double m = std::abs(tf(u));
      if (m > best) {
        best = m;
        at = u;
      }
    }
    if (best > 0.0) {
      bu.push_back(at);
      by.push_back(std::log(best));
    } else if (!bu.empty()) {
      break;  // transform underflowed; fit on the resolvable range
    }
  }
  const int n = static_cast<int>(bu.size());
  if (n < 6)
    throw InvariantViolation("envelope fit: too few resolvable frequency blocks");

  const auto fit_for = [&](double r, double& a, double& b, double& logL) {
    const int cols = r > 0.0 ? 3 : 2;
    Eigen::MatrixXd X(n, cols);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = -std::log(bu[i]);
      if (cols == 3) X(i, 2) = -std::pow(bu[i], r);
      y[i] = by[i];
    }
    Eigen::VectorXd c = X.colPivHouseholderQr().solve(y);
    if (cols == 3 && c[2] < 0.0) return std::numeric_limits<double>::infinity();
    logL = c[0];
    a = c[1];
    b = cols == 3 ? c[2] : 0.0;
    return (X * c - y).squaredNorm();
  };

  R1Tuple out;
  out.u0 = u0;
  double a0 = 0.0, b0 = 0.0, l0 = 0.0;
  const double ss0 = fit_for(0.0, a0, b0, l0);
  double best_ss = ss0;
  out.a = a0;
  for (double r = 0.1; r <= 2.0001; r += 0.1) {
    double a = 0.0, b = 0.0, logL = 0.0;
    const double ss = fit_for(r, a, b, logL);
    // require a clear win over pure polynomial decay before accepting r > 0
    if (ss < best_ss && ss < 0.9 * ss0) {
      best_ss = ss;
      out.a = a;
      out.b = b;
      out.r = r;
    }
  }
  if (out.b <= 1e-10) {
    out.b = 0.0;
    out.r = 0.0;
    out.a = a0;
  }

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < n; ++i) {
    const double le = by[i] + out.a * std::log(bu[i]) +
                      (out.r > 0.0 ? out.b * std::pow(bu[i], out.r) : 0.0);
    lo = std::min(lo, le);
    hi = std::max(hi, le);
  }
  out.L_lo = std::exp(lo);
  out.L_hi = std::exp(hi);
  return out;
}

namespace detail {

//! Value plus first and second theta-derivatives of an exponential-polynomial
//! expression, propagated by the product rule.  The x-dependence stays
//! symbolic; theta enters through the coefficients.
struct ExpPolyJet {
  ExpPoly v;
  std::vector<ExpPoly> g;
  std::vector<std::vector<ExpPoly>> h;

  static ExpPolyJet make(int d) {
    ExpPolyJet j;
    j.g.resize(d);
    j.h.assign(d, std::vector<ExpPoly>(d));
    return j;
  }

  static ExpPolyJet constant(ExpPoly p, int d) {
    ExpPolyJet j = make(d);
    j.v = std::move(p);
    return j;
  }

  int dim() const { return static_cast<int>(g.size()); }

  ExpPolyJet mul(const ExpPolyJet& o) const {
    const int d = dim();
    ExpPolyJet out = make(d);
    out.v = v * o.v;
    for (int k = 0; k < d; ++k) out.g[k] = g[k] * o.v + v * o.g[k];
    for (int j = 0; j < d; ++j)
      for (int k = j; k < d; ++k) {
        out.h[j][k] = h[j][k] * o.v + g[j] * o.g[k] + g[k] * o.g[j] + v * o.h[j][k];
        out.h[k][j] = out.h[j][k];
      }
    return out;
  }

  ExpPolyJet pow(int m) const {
    ExpPolyJet acc = constant(ExpPoly::constant(1.0), dim());
    for (int i = 0; i < m; ++i) acc = acc.mul(*this);
    return acc;
  }
};

//! t^p with derivatives in component idx; the p = 0 and p = 1 powers drop out
//! before any negative exponent can be formed.
inline ExpPolyJet scalar_power_jet(double t, int p, int d, int idx) {
  ExpPolyJet j = ExpPolyJet::make(d);
  j.v = ExpPoly::constant(std::pow(t, p));
  if (p >= 1) j.g[idx] = ExpPoly::constant(p * std::pow(t, p - 1));
  if (p >= 2) j.h[idx][idx] = ExpPoly::constant(p * (p - 1) * std::pow(t, p - 2));
  return j;
}

//! Exponential-polynomial basis for the linear families that admit one.
inline std::optional<std::vector<ExpPoly>> expoly_basis(const RegressionFamily& f) {
  const int d = f.dimension();
  std::vector<ExpPoly> basis;
  if (f.name() == "polynomial") {
    for (int k = 0; k < d; ++k) basis.push_back(ExpPoly::monomial(1.0, k + 1, 0.0));
    return basis;
  }
  if (f.name() == "cosineSum") {
    for (int j = 1; j <= d; ++j) {
      const Complex ij(0.0, static_cast<double>(j));
      basis.push_back(ExpPoly::monomial(0.5, 0, ij) + ExpPoly::monomial(0.5, 0, -ij));
    }
    return basis;
  }
  return std::nullopt;
}

struct AnalyticParts {
  double beta;
  ExpPolyJet jet;  // psi = jet.v(x) * exp(-x^2/(4 beta)) and theta-derivatives
};

inline ExpPoly one_plus_x2_pow(int m) {
  const ExpPoly q = ExpPoly::constant(1.0) + ExpPoly::monomial(1.0, 2, 0.0);
  return q.pow(m);
}

//! Closed-form jet for the registered weight/family pairings; nullopt sends
//! the build down the numeric path.
inline std::optional<AnalyticParts> analytic_parts(const WeightSpec& w,
                                                   const RegressionFamily& f,
                                                   int p, const Vector& th) {
  const int d = f.dimension();

  if (w.kind() == WeightSpec::Kind::gaussian_damp ||
      w.kind() == WeightSpec::Kind::rational_gaussian) {
    const int m = w.kind() == WeightSpec::Kind::rational_gaussian
                      ? w.rational_power()
                      : 0;
    if (f.name() == "cauchy") {
      // w f^p = theta^p (1+x^2)^{m-p} exp(-x^2/(4 beta)) when the rational
      // factor covers both powers of the denominator
      if (m < p) return std::nullopt;
      ExpPolyJet jet =
          scalar_power_jet(th[0], p, d, 0).mul(ExpPolyJet::constant(one_plus_x2_pow(m - p), d));
      return AnalyticParts{w.beta(), std::move(jet)};
    }
    ExpPolyJet family = ExpPolyJet::make(d);
    if (auto basis = expoly_basis(f)) {
      for (int k = 0; k < d; ++k) {
        family.v = family.v + (*basis)[k].scaled(th[k]);
        family.g[k] = (*basis)[k];
      }
    } else if (f.name() == "exponential") {
      family.v = ExpPoly::monomial(1.0, 0, th[0]);
      family.g[0] = ExpPoly::monomial(1.0, 1, th[0]);
      family.h[0][0] = ExpPoly::monomial(1.0, 2, th[0]);
    } else {
      return std::nullopt;
    }
    ExpPolyJet jet = ExpPolyJet::constant(one_plus_x2_pow(m), d).mul(family.pow(p));
    return AnalyticParts{w.beta(), std::move(jet)};
  }

  if (w.name() == "cauchyThetaMatch" && f.name() == "cauchyTheta") {
    // w_theta f^p = (1 + theta x^2)^{2-p} exp(-x^2/(4 beta))
    ExpPolyJet base = ExpPolyJet::make(1);
    base.v = ExpPoly::constant(1.0) + ExpPoly::monomial(th[0], 2, 0.0);
    base.g[0] = ExpPoly::monomial(1.0, 2, 0.0);
    return AnalyticParts{w.beta(), base.pow(2 - p)};
  }

  if (w.name() == "logistic3Match" && f.name() == "logistic3") {
    // w_theta f^p = theta_1^p (1 + theta_2 e^{theta_3 x})^{4-p} G
    const ExpPoly e = ExpPoly::monomial(1.0, 0, th[2]);
    const ExpPoly xe = ExpPoly::monomial(1.0, 1, th[2]);
    const ExpPoly x2e = ExpPoly::monomial(1.0, 2, th[2]);
    ExpPolyJet den = ExpPolyJet::make(3);
    den.v = ExpPoly::constant(1.0) + e.scaled(th[1]);
    den.g[1] = e;
    den.g[2] = xe.scaled(th[1]);
    den.h[1][2] = den.h[2][1] = xe;
    den.h[2][2] = x2e.scaled(th[1]);
    ExpPolyJet jet = scalar_power_jet(th[0], p, 3, 0).mul(den.pow(4 - p));
    return AnalyticParts{w.beta(), std::move(jet)};
  }

  if (w.name() == "logistic4Match" && f.name() == "logistic4") {
    // w_theta f^p = (1+E)^{4-p} (theta_1 + theta_2 E)^p G, E = e^{theta_3 + theta_4 x}
    const double c = std::exp(th[2]);
    const ExpPoly e = ExpPoly::monomial(c, 0, th[3]);
    const ExpPoly xe = ExpPoly::monomial(c, 1, th[3]);
    const ExpPoly x2e = ExpPoly::monomial(c, 2, th[3]);
    ExpPolyJet outer = ExpPolyJet::make(4);
    outer.v = ExpPoly::constant(1.0) + e;
    outer.g[2] = e;
    outer.g[3] = xe;
    outer.h[2][2] = e;
    outer.h[2][3] = outer.h[3][2] = xe;
    outer.h[3][3] = x2e;
    ExpPolyJet inner = ExpPolyJet::make(4);
    inner.v = ExpPoly::constant(th[0]) + e.scaled(th[1]);
    inner.g[0] = ExpPoly::constant(1.0);
    inner.g[1] = e;
    inner.g[2] = e.scaled(th[1]);
    inner.g[3] = xe.scaled(th[1]);
    inner.h[1][2] = inner.h[2][1] = e;
    inner.h[1][3] = inner.h[3][1] = xe;
    inner.h[2][2] = e.scaled(th[1]);
    inner.h[2][3] = inner.h[3][2] = xe.scaled(th[1]);
    inner.h[3][3] = x2e.scaled(th[1]);
    ExpPolyJet jet = outer.pow(4 - p).mul(inner.pow(p));
    return AnalyticParts{w.beta(), std::move(jet)};
  }

  return std::nullopt;
}

//! Envelope tuple of a closed-form transform.  Real exponential rates leave a
//! clean polynomial factor (a = minus the polynomial degree); imaginary rates
//! shift the Gaussian peaks, so the power is dropped and the constants absorb
//! the shift on the scanned window.
inline R1Tuple analytic_r1(const GaussExpPoly& gp) {
  R1Tuple t;
  if (gp.poly().empty()) {
    t.zero = true;
    return t;
  }
  const double beta = gp.beta();
  double rate_scale = 0.0;
  bool imag_rate = false;
  int max_pow = 0;
  for (const auto& term : gp.poly().terms()) {
    rate_scale = std::max(rate_scale, std::abs(term.rate));
    if (std::abs(term.rate.imag()) > 1e-12) imag_rate = true;
    max_pow = std::max(max_pow, term.xpow);
  }
  t.r = 2.0;
  t.b = beta;
  t.a = imag_rate ? 0.0 : -static_cast<double>(max_pow);
  t.u0 = std::max(1.0, 2.0 * rate_scale + 2.0);
  double u1 = rate_scale + std::sqrt(500.0 / beta);
  u1 = std::max(u1, 1.5 * t.u0);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  const int pts = 160;
  for (int i = 0; i < pts; ++i) {
    const double u = t.u0 * std::exp(std::log(u1 / t.u0) * (i + 0.5) / pts);
    const double m = std::abs(gp.fourier(u));
    if (!(m > 0.0)) continue;
    const double le = std::log(m) + t.a * std::log(u) + beta * u * u;
    lo = std::min(lo, le);
    hi = std::max(hi, le);
  }
  if (!(hi >= lo)) throw InvariantViolation("transform envelope scan found no mass");
  t.L_lo = std::exp(lo);
  t.L_hi = std::exp(hi);
  return t;
}

//! Deferred tabulated transform; the builder runs once on first evaluation.
class LazyTransform {
 public:
  LazyTransform() = default;
  explicit LazyTransform(std::function<TabulatedTransform()> builder) {
    state_ = std::make_shared<State>();
    state_->builder = std::move(builder);
  }

  Complex operator()(double u) const {
    if (!state_) throw MissingFourierTransform("transform not configured");
    std::call_once(state_->once, [&] {
      state_->tab = state_->builder();
      state_->builder = nullptr;
    });
    return state_->tab(u);
  }

 private:
  struct State {
    std::once_flag once;
    std::function<TabulatedTransform()> builder;
    TabulatedTransform tab;
  };
  std::shared_ptr<State> state_;
};

struct LazyR1 {
  std::function<R1Tuple()> compute;
  std::once_flag once;
  R1Tuple value;

  const R1Tuple& get() {
    std::call_once(once, [&] {
      value = compute();
      compute = nullptr;
    });
    return value;
  }
};

inline std::shared_ptr<LazyR1> lazy_r1(std::function<R1Tuple()> fn) {
  auto p = std::make_shared<LazyR1>();
  p->compute = std::move(fn);
  return p;
}

inline std::shared_ptr<LazyR1> fixed_r1(R1Tuple t) {
  auto p = std::make_shared<LazyR1>();
  p->compute = [t] { return t; };
  return p;
}

//! Index of the tabulated w*b_j*b_k transform in the shared basis-tab layout
//! [w, w*b_1..w*b_d, w*b_j*b_k for j <= k].
inline int basis_pair_index(int d, int j, int k) {
  if (j > k) std::swap(j, k);
  return 1 + d + j * d - j * (j - 1) / 2 + (k - j);
}

inline TargetFunctions zero_target_functions() {
  TargetFunctions tf;
  tf.value = [](double) { return 0.0; };
  tf.transform = [](double) { return Complex(0.0); };
  tf.analytic = true;
  return tf;
}

inline R1Tuple zero_r1() {
  R1Tuple t;
  t.zero = true;
  return t;
}

}  // namespace detail

//! One weighted target psi = w_theta f_theta^p at a fixed theta: values,
//! Fourier transform, analytic theta-derivative components up to order two,
//! and the transform envelope of each component (computed on first request).
class WeightedTarget {
 public:
  int dimension() const { return d_; }
  int power() const { return p_; }
  const Vector& theta() const { return theta_; }
  bool analytic() const { return psi_.analytic; }
  std::pair<double, double> support() const { return support_; }

  const TargetFunctions& psi() const { return psi_; }
  const TargetFunctions& grad(int k) const { return grad_.at(k); }
  const TargetFunctions& hess(int j, int k) const { return hess_.at(j * d_ + k); }

  const R1Tuple& smoothness() const { return r1_.front()->get(); }
  const R1Tuple& grad_smoothness(int k) const { return r1_.at(k + 1)->get(); }

  //! Numeric integral of |psi| over the support.
  double l1() const {
    const auto& v = psi_.value;
    return integrate([&](double x) { return std::abs(v(x)); }, support_.first,
                     support_.second);
  }

  //! Directional third theta-derivative of psi at x by central differences.
  double third_directional(double x, const Vector& v) const {
    if (v.size() != d_) throw DimensionMismatch("direction size mismatch");
    const double scale = std::max(1.0, theta_.norm());
    const double h = 1e-2 * scale / std::max(1.0, v.norm());
    const auto at = [&](double t) { return raw_(theta_ + t * v, x); };
    return (at(2.0 * h) - 2.0 * at(h) + 2.0 * at(-h) - at(-2.0 * h)) /
           (2.0 * h * h * h);
  }

 private:
  friend class TargetBundle;
  WeightedTarget() = default;

  int d_ = 0, p_ = 0;
  Vector theta_;
  TargetFunctions psi_;
  std::vector<TargetFunctions> grad_;
  std::vector<TargetFunctions> hess_;  // row-major d x d, symmetric
  std::vector<std::shared_ptr<detail::LazyR1>> r1_;  // [0] psi, [k+1] grad k
  std::function<double(const Vector&, double)> raw_;
  std::pair<double, double> support_{0.0, 0.0};
};

//! Factory for the weighted targets of one (weight, family) pair.  Closed-form
//! pairings go through the exponential-polynomial jet; linear families with a
//! fixed weight share one set of tabulated basis transforms across every
//! theta; everything else tabulates per build.
class TargetBundle {
 public:
  TargetBundle(WeightSpec w, RegressionFamily f, TargetBuildOptions opts = {})
      : w_(std::move(w)), f_(std::move(f)), o_(opts) {
    Vector probe = 0.5 * (f_.box_lo() + f_.box_hi());
    analytic_ = detail::analytic_parts(w_, f_, 1, probe).has_value();
    // basis tabs stay available as a fallback for powers an analytic pairing
    // does not cover; they cost nothing until first evaluated
    if (!w_.theta_dependent() && f_.linear_in_theta()) init_basis_tabs();
  }

  const WeightSpec& weight() const { return w_; }
  const RegressionFamily& family() const { return f_; }
  const TargetBuildOptions& options() const { return o_; }
  bool analytic() const { return analytic_; }

  WeightedTarget build(int p, const Vector& theta) const {
    if (p < 0 || p > 2) throw InvariantViolation("target power must be 0, 1, or 2");
    f_.check_dimension(theta);
    if (analytic_) {
      if (auto parts = detail::analytic_parts(w_, f_, p, theta))
        return build_analytic(p, theta, std::move(*parts));
    }
    if (shared_) return build_basis(p, theta);
    return build_generic(p, theta);
  }

 private:
  // ---- closed-form path ----------------------------------------------------

  WeightedTarget build_analytic(int p, const Vector& theta,
                                detail::AnalyticParts parts) const {
    const double beta = parts.beta;
    const int d = f_.dimension();

    WeightedTarget t;
    t.d_ = d;
    t.p_ = p;
    t.theta_ = theta;
    t.raw_ = raw_value(p);

    double rate_scale = 0.0;
    for (const auto& term : parts.jet.v.terms())
      rate_scale = std::max(rate_scale, std::abs(term.rate.real()));
    const double half = 2.0 * beta * rate_scale + 2.0 * std::sqrt(700.0 * beta) + 1.0;
    t.support_ = {-half, half};

    t.psi_ = wrap(GaussExpPoly(beta, parts.jet.v));
    t.r1_.push_back(r1_of(GaussExpPoly(beta, parts.jet.v)));
    for (int k = 0; k < d; ++k) {
      t.grad_.push_back(wrap(GaussExpPoly(beta, parts.jet.g[k])));
      t.r1_.push_back(r1_of(GaussExpPoly(beta, parts.jet.g[k])));
    }
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        t.hess_.push_back(wrap(GaussExpPoly(beta, parts.jet.h[j][k])));
    return t;
  }

  static TargetFunctions wrap(GaussExpPoly gp) {
    TargetFunctions tf;
    if (gp.poly().empty()) return detail::zero_target_functions();
    tf.analytic = true;
    tf.value = [gp](double x) { return gp.evaluate(x); };
    tf.transform = [gp](double u) { return gp.fourier(u); };
    return tf;
  }

  static std::shared_ptr<detail::LazyR1> r1_of(GaussExpPoly gp) {
    if (gp.poly().empty()) return detail::fixed_r1(detail::zero_r1());
    return detail::lazy_r1([gp] { return detail::analytic_r1(gp); });
  }

  // ---- shared-basis numeric path --------------------------------------------

  void init_basis_tabs() {
    shared_ = std::make_shared<Shared>();
    const int d = f_.dimension();
    const WeightSpec w = w_;
    const RegressionFamily f = f_;
    auto shared = shared_;
    const TargetBuildOptions o = o_;

    auto support = [shared, w, f]() {
      std::call_once(shared->support_once, [&] {
        try {
          const int d = f.dimension();
          shared->support = effective_support([&](double x) {
            const Vector b = f.basis(x);
            double e = 1.0;
            for (int j = 0; j < d; ++j) e += b[j] * b[j];
            return w.value(x) * e;
          });
        } catch (...) {
          shared->support_error = std::current_exception();
        }
      });
      if (shared->support_error) std::rethrow_exception(shared->support_error);
      return shared->support;
    };
    shared_->get_support = support;

    auto add_tab = [&](std::function<double(double)> fn) {
      shared->tabs.emplace_back(detail::LazyTransform([support, fn, o] {
        const auto [lo, hi] = support();
        return numeric_fourier_transform(fn, lo, hi, o.u_max, o.transform_rel_tol,
                                         o.quad);
      }));
    };

    add_tab([w](double x) { return w.value(x); });
    for (int j = 0; j < d; ++j)
      add_tab([w, f, j](double x) { return w.value(x) * f.basis(x)[j]; });
    for (int j = 0; j < d; ++j)
      for (int k = j; k < d; ++k)
        add_tab([w, f, j, k](double x) {
          const Vector b = f.basis(x);
          return w.value(x) * b[j] * b[k];
        });
  }

  WeightedTarget build_basis(int p, const Vector& theta) const {
    shared_->get_support();  // integrability gate; throws NotIntegrable
    const int d = f_.dimension();
    const WeightSpec w = w_;
    const RegressionFamily f = f_;
    const auto tabs = shared_->tabs;

    WeightedTarget t;
    t.d_ = d;
    t.p_ = p;
    t.theta_ = theta;
    t.raw_ = raw_value(p);
    t.support_ = shared_->support;

    const bool theta_zero = theta.lpNorm<Eigen::Infinity>() == 0.0;
    const auto numeric_fit = [this](std::function<Complex(double)> tf) {
      const double u1 = std::min(o_.u_max, 100.0);
      const double u0 = o_.fit_u0;
      return detail::lazy_r1([tf, u0, u1] { return fit_r1_tuple(tf, u0, u1); });
    };

    if (p == 0) {
      TargetFunctions tf;
      tf.value = [w](double x) { return w.value(x); };
      tf.transform = [tabs](double u) { return tabs[0](u); };
      t.psi_ = tf;
      t.r1_.push_back(numeric_fit(tf.transform));
      for (int k = 0; k < d; ++k) {
        t.grad_.push_back(detail::zero_target_functions());
        t.r1_.push_back(detail::fixed_r1(detail::zero_r1()));
      }
      t.hess_.assign(static_cast<std::size_t>(d) * d,
                     detail::zero_target_functions());
      return t;
    }

    if (p == 1) {
      if (theta_zero) {
        t.psi_ = detail::zero_target_functions();
        t.r1_.push_back(detail::fixed_r1(detail::zero_r1()));
      } else {
        TargetFunctions tf;
        tf.value = [w, f, theta](double x) {
          return w.value(x) * f.value(theta, x);
        };
        tf.transform = [tabs, theta, d](double u) {
          Complex s = 0.0;
          for (int j = 0; j < d; ++j) s += theta[j] * tabs[1 + j](u);
          return s;
        };
        t.psi_ = tf;
        t.r1_.push_back(numeric_fit(tf.transform));
      }
      for (int k = 0; k < d; ++k) {
        TargetFunctions tf;
        tf.value = [w, f, k](double x) { return w.value(x) * f.basis(x)[k]; };
        tf.transform = [tabs, k](double u) { return tabs[1 + k](u); };
        t.grad_.push_back(tf);
        t.r1_.push_back(numeric_fit(tf.transform));
      }
      t.hess_.assign(static_cast<std::size_t>(d) * d,
                     detail::zero_target_functions());
      return t;
    }

    // p == 2
    if (theta_zero) {
      t.psi_ = detail::zero_target_functions();
      t.r1_.push_back(detail::fixed_r1(detail::zero_r1()));
    } else {
      TargetFunctions tf;
      tf.value = [w, f, theta](double x) {
        const double v = f.value(theta, x);
        return w.value(x) * v * v;
      };
      tf.transform = [tabs, theta, d](double u) {
        Complex s = 0.0;
        for (int j = 0; j < d; ++j)
          for (int k = j; k < d; ++k)
            s += (j == k ? 1.0 : 2.0) * theta[j] * theta[k] *
                 tabs[detail::basis_pair_index(d, j, k)](u);
        return s;
      };
      t.psi_ = tf;
      t.r1_.push_back(numeric_fit(tf.transform));
    }
    for (int k = 0; k < d; ++k) {
      if (theta_zero) {
        t.grad_.push_back(detail::zero_target_functions());
        t.r1_.push_back(detail::fixed_r1(detail::zero_r1()));
        continue;
      }
      TargetFunctions tf;
      tf.value = [w, f, theta, k](double x) {
        return 2.0 * w.value(x) * f.value(theta, x) * f.basis(x)[k];
      };
      tf.transform = [tabs, theta, d, k](double u) {
        Complex s = 0.0;
        for (int j = 0; j < d; ++j)
          s += 2.0 * theta[j] * tabs[detail::basis_pair_index(d, j, k)](u);
        return s;
      };
      t.grad_.push_back(tf);
      t.r1_.push_back(numeric_fit(tf.transform));
    }
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        TargetFunctions tf;
        tf.value = [w, f, j, k](double x) {
          const Vector b = f.basis(x);
          return 2.0 * w.value(x) * b[j] * b[k];
        };
        tf.transform = [tabs, d, j, k](double u) {
          return 2.0 * tabs[detail::basis_pair_index(d, j, k)](u);
        };
        t.hess_.push_back(tf);
      }
    return t;
  }

  // ---- generic numeric path --------------------------------------------------

  WeightedTarget build_generic(int p, const Vector& theta) const {
    const int d = f_.dimension();
    const WeightSpec w = w_;
    const RegressionFamily f = f_;
    const TargetBuildOptions o = o_;

    WeightedTarget t;
    t.d_ = d;
    t.p_ = p;
    t.theta_ = theta;
    t.raw_ = raw_value(p);

    const auto value = [w, f, p, theta](double x) {
      const double wx = w.value(x, theta);
      if (p == 0) return wx;
      const double fx = f.value(theta, x);
      return p == 1 ? wx * fx : wx * fx * fx;
    };
    t.support_ = effective_support(value);
    const auto [lo, hi] = t.support_;

    const auto lazy_tf = [o, lo, hi](std::function<double(double)> fn) {
      return detail::LazyTransform([o, lo, hi, fn] {
        return numeric_fourier_transform(fn, lo, hi, o.u_max, o.transform_rel_tol,
                                         o.quad);
      });
    };
    const auto numeric_fit = [o](std::function<Complex(double)> tf) {
      const double u1 = std::min(o.u_max, 100.0);
      return detail::lazy_r1([tf, u0 = o.fit_u0, u1] {
        return fit_r1_tuple(tf, u0, u1);
      });
    };
    const auto pack = [&](std::function<double(double)> fn) {
      TargetFunctions tf;
      tf.value = fn;
      tf.transform = lazy_tf(fn);
      return tf;
    };

    t.psi_ = pack(value);
    t.r1_.push_back(numeric_fit(t.psi_.transform));

    for (int k = 0; k < d; ++k) {
      auto gfn = [w, f, p, theta, k](double x) {
        const double wg = w.grad_theta(x, theta)[k];
        if (p == 0) return wg;
        const double fx = f.value(theta, x);
        const double fg = f.grad(theta, x)[k];
        const double wx = w.value(x, theta);
        if (p == 1) return wg * fx + wx * fg;
        return wg * fx * fx + 2.0 * wx * fx * fg;
      };
      t.grad_.push_back(pack(gfn));
      t.r1_.push_back(numeric_fit(t.grad_.back().transform));
    }

    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        auto hfn = [w, f, p, theta, j, k](double x) {
          const double wh = w.hess_theta(x, theta)(j, k);
          if (p == 0) return wh;
          const Vector wg = w.grad_theta(x, theta);
          const Vector fg = f.grad(theta, x);
          const double fh = f.hess(theta, x)(j, k);
          const double fx = f.value(theta, x);
          const double wx = w.value(x, theta);
          if (p == 1)
            return wh * fx + wg[j] * fg[k] + wg[k] * fg[j] + wx * fh;
          return wh * fx * fx + 2.0 * fx * (wg[j] * fg[k] + wg[k] * fg[j]) +
                 2.0 * wx * (fg[j] * fg[k] + fx * fh);
        };
        t.hess_.push_back(pack(hfn));
      }
    return t;
  }

  std::function<double(const Vector&, double)> raw_value(int p) const {
    const WeightSpec w = w_;
    const RegressionFamily f = f_;
    return [w, f, p](const Vector& th, double x) {
      const double wx = w.value(x, th);
      if (p == 0) return wx;
      const double fx = f.value(th, x);
      return p == 1 ? wx * fx : wx * fx * fx;
    };
  }

  WeightSpec w_;
  RegressionFamily f_;
  TargetBuildOptions o_;
  bool analytic_ = false;
  bool basis_mode_ = false;

  struct Shared {
    std::once_flag support_once;
    std::pair<double, double> support;
    std::exception_ptr support_error;
    std::function<std::pair<double, double>()> get_support;
    std::vector<detail::LazyTransform> tabs;
  };
  std::shared_ptr<Shared> shared_;
};

//! One-off convenience wrapper around TargetBundle.
inline WeightedTarget build_weighted_target(const WeightSpec& w,
                                            const RegressionFamily& f, int p,
                                            const Vector& theta,
                                            const TargetBuildOptions& opts = {}) {
  return TargetBundle(w, f, opts).build(p, theta);
}

}  // namespace eivreg
