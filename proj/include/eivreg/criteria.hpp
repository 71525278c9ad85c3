#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "eivreg/deconvolution.hpp"
#include "eivreg/envelopes.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/kernel.hpp"
#include "eivreg/noise.hpp"
#include "eivreg/phi.hpp"
#include "eivreg/sample.hpp"
#include "eivreg/targets.hpp"

namespace eivreg {

//! The four empirical objectives.  tilde1/hat1 smooth the weighted targets
//! with a deconvolving kernel at bandwidth Cn; tilde2/hat2 use the direct
//! correction functions (no kernel, no bandwidth).  The hat variants replace
//! Y^2 by Y^2 - sigma2 in the leading term, which removes the regression
//! noise offset and admits parameter-dependent weights.
enum class CriterionKind { tilde1, tilde2, hat1, hat2 };

inline const char* criterion_name(CriterionKind k) {
  switch (k) {
    case CriterionKind::tilde1: return "tilde1";
    case CriterionKind::tilde2: return "tilde2";
    case CriterionKind::hat1: return "hat1";
    case CriterionKind::hat2: return "hat2";
  }
  return "?";
}

inline CriterionKind parse_criterion(const std::string& name) {
  if (name == "tilde1") return CriterionKind::tilde1;
  if (name == "tilde2") return CriterionKind::tilde2;
  if (name == "hat1") return CriterionKind::hat1;
  if (name == "hat2") return CriterionKind::hat2;
  throw ConfigError("unknown criterion '" + name + "'");
}

inline bool kernel_criterion(CriterionKind k) {
  return k == CriterionKind::tilde1 || k == CriterionKind::hat1;
}

inline bool centered_criterion(CriterionKind k) {
  return k == CriterionKind::hat1 || k == CriterionKind::hat2;
}

struct CriterionOptions {
  int panel_order = 16;   // Gauss-Legendre order on each frequency panel
  int refine = 0;         // extra grid refinement levels (halves panel width)
  double ratio_tol = 1e-12;  // envelope drop deciding the ratio truncation
  TargetBuildOptions targets;
};

namespace detail {

//! Frequency kinks of the kernel window K*(t): panel boundaries must land on
//! them, otherwise the fixed-grid quadrature loses its spectral accuracy.
inline std::vector<double> kernel_knots(const KernelSpec& k) {
  std::vector<double> knots{1.0};
  if (k.support() > 1.0) knots.push_back(k.support());
  return knots;
}

//! Positive-frequency quadrature core: nodes, real window weights (Gauss
//! weight times spectral window) and the empirical characteristic moments
//!   s_q(u) = n^-1 sum_i c_{q,i} exp(-i u Z_i)
//! with c_0 = 1, c_1 = Y_i, c_2 = Y_i^2 - sigma2.
struct FreqCore {
  std::vector<double> u;
  std::vector<double> w;
  std::vector<Complex> s0, s1, s2;
};

inline FreqCore make_core(const std::vector<double>& bounds, double z_scale,
                          int order, int refine,
                          const std::function<double(double)>& window) {
  FreqCore c;
  for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
    const FreqGrid g =
        frequency_grid(bounds[s], bounds[s + 1], z_scale, order, refine);
    for (std::size_t j = 0; j < g.node.size(); ++j) {
      c.u.push_back(g.node[j]);
      c.w.push_back(g.weight[j] * window(g.node[j]));
    }
  }
  return c;
}

inline void fill_ecf(FreqCore& c, const Sample& sample, double sigma2) {
  const std::size_t m = c.u.size(), n = sample.size();
  c.s0.assign(m, Complex(0.0));
  c.s1.assign(m, Complex(0.0));
  c.s2.assign(m, Complex(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double y = sample.y[i], z = sample.z[i];
    const double c2 = y * y - sigma2;
    for (std::size_t j = 0; j < m; ++j) {
      const Complex e = std::exp(Complex(0.0, -c.u[j] * z));
      c.s0[j] += e;
      c.s1[j] += y * e;
      c.s2[j] += c2 * e;
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < m; ++j) {
    c.s0[j] *= inv;
    c.s1[j] *= inv;
    c.s2[j] *= inv;
  }
}

//! (1/pi) sum_j w_j Re[a0*(u_j) s2_j - 2 a1*(u_j) s1_j + a2*(u_j) s0_j];
//! the positive-half-line form of the criterion integral.
inline double combine(const FreqCore& c, const TargetFunctions& a0,
                      const TargetFunctions& a1, const TargetFunctions& a2) {
  double acc = 0.0;
  for (std::size_t j = 0; j < c.u.size(); ++j) {
    const double u = c.u[j];
    const Complex f = a0.transform(u) * c.s2[j] -
                      2.0 * a1.transform(u) * c.s1[j] +
                      a2.transform(u) * c.s0[j];
    acc += c.w[j] * f.real();
  }
  return acc / M_PI;
}

//! Built targets psi_0, psi_1, psi_2 for the most recent theta.
struct TargetCache {
  bool set = false;
  Vector theta;
  std::vector<WeightedTarget> t;

  const std::vector<WeightedTarget>& at(const TargetBundle& bundle,
                                        const Vector& theta_new) {
    if (!set || theta.size() != theta_new.size() ||
        (theta - theta_new).cwiseAbs().maxCoeff() != 0.0) {
      t.clear();
      for (int p = 0; p < 3; ++p) t.push_back(bundle.build(p, theta_new));
      theta = theta_new;
      set = true;
    }
    return t;
  }
};

}  // namespace detail

//! Kernel-smoothed criterion (tilde1 / hat1):
//!   n^-1 sum_i [c_{2,i} (w * K)(Z_i) - 2 Y_i (w f * K)(Z_i)
//!               + (w f^2 * K)(Z_i)]
//! where K is the deconvolving kernel at bandwidth Cn and c_2 is Y^2
//! (tilde1) or Y^2 - sigma2 (hat1).  Evaluated in the frequency domain: the
//! empirical characteristic moments are precomputed on a fixed grid over the
//! spectral window, so each evaluation at a new theta costs O(grid), not
//! O(grid * n).
class KernelCriterion {
 public:
  KernelCriterion(CriterionKind kind, const Sample& sample, TargetBundle bundle,
                  NoiseModel noise, KernelSpec kernel, double cn,
                  double sigma2 = 0.0, CriterionOptions opts = {})
      : kind_(kind),
        cn_(cn),
        sigma2_(sigma2),
        bundle_(std::move(bundle)),
        noise_(std::move(noise)),
        kernel_(std::move(kernel)) {
    if (!kernel_criterion(kind))
      throw InvariantViolation("KernelCriterion handles tilde1 and hat1 only");
    if (!(cn > 0.0)) throw InvariantViolation("bandwidth must be positive");
    if (sample.size() == 0) throw InvariantViolation("empty sample");
    kernel_.validate();
    if (kind == CriterionKind::tilde1) {
      if (bundle_.weight().theta_dependent())
        throw InvariantViolation(
            "tilde1 requires a parameter-free weight; use hat1 for "
            "parameter-dependent weights");
      if (sigma2 != 0.0)
        throw InvariantViolation("tilde1 does not center the Y^2 term");
    } else if (!(sigma2 >= 0.0)) {
      throw InvariantViolation("hat1 needs sigma2 >= 0");
    }

    double z_scale = 1.0;
    for (double z : sample.z) z_scale = std::max(z_scale, std::abs(z));

    std::vector<double> bounds{0.0};
    for (double k : detail::kernel_knots(kernel_)) bounds.push_back(k * cn_);
    const auto window = [this](double u) {
      return kernel_.ft(u / cn_) * deconv_weight(noise_, u);
    };
    core_ = detail::make_core(bounds, z_scale, opts.panel_order, opts.refine,
                              window);
    detail::fill_ecf(core_, sample, centered_criterion(kind) ? sigma2 : 0.0);
  }

  //! Convenience constructor building the target bundle in place, with the
  //! tabulation range widened to cover the spectral window.
  KernelCriterion(CriterionKind kind, const Sample& sample, WeightSpec w,
                  RegressionFamily f, NoiseModel noise, KernelSpec kernel,
                  double cn, double sigma2 = 0.0, CriterionOptions opts = {})
      : KernelCriterion(kind, sample,
                        TargetBundle(std::move(w), std::move(f),
                                     widen(opts.targets, kernel, cn)),
                        std::move(noise), std::move(kernel), cn, sigma2, opts) {}

  CriterionKind kind() const { return kind_; }
  double cn() const { return cn_; }
  double sigma2() const { return sigma2_; }
  const TargetBundle& targets() const { return bundle_; }

  double value(const Vector& theta) const {
    const auto& t = cache_.at(bundle_, theta);
    return detail::combine(core_, t[0].psi(), t[1].psi(), t[2].psi());
  }

  Vector gradient(const Vector& theta) const {
    const auto& t = cache_.at(bundle_, theta);
    const int d = t[0].dimension();
    Vector g(d);
    for (int k = 0; k < d; ++k)
      g[k] = detail::combine(core_, t[0].grad(k), t[1].grad(k), t[2].grad(k));
    return g;
  }

  Matrix hessian(const Vector& theta) const {
    const auto& t = cache_.at(bundle_, theta);
    const int d = t[0].dimension();
    Matrix h(d, d);
    for (int k = 0; k < d; ++k)
      for (int l = k; l < d; ++l) {
        h(k, l) = detail::combine(core_, t[0].hess(k, l), t[1].hess(k, l),
                                  t[2].hess(k, l));
        h(l, k) = h(k, l);
      }
    return h;
  }

 private:
  static TargetBuildOptions widen(TargetBuildOptions o, const KernelSpec& k,
                                  double cn) {
    o.u_max = std::max(o.u_max, k.support() * cn + 1.0);
    return o;
  }

  CriterionKind kind_;
  double cn_, sigma2_;
  TargetBundle bundle_;
  NoiseModel noise_;
  KernelSpec kernel_;
  detail::FreqCore core_;
  mutable detail::TargetCache cache_;
};

//! Direct criterion (tilde2 / hat2):
//!   n^-1 sum_i [c_{2,i} Phi_3(Z_i) - 2 Y_i Phi_2(Z_i) + Phi_1(Z_i)].
//! Closed-form Phi sources are evaluated pointwise; the Fourier-ratio source
//! shares the same frequency-domain core as the kernel criteria with the
//! window 1/p_eps* over the truncated range chosen from the ratio envelope.
class PhiCriterion {
 public:
  PhiCriterion(CriterionKind kind, const Sample& sample, PhiTriple phi,
               double sigma2 = 0.0, CriterionOptions opts = {})
      : kind_(kind),
        sigma2_(sigma2),
        phi_(std::move(phi)),
        opts_(opts),
        sample_(sample) {
    if (kernel_criterion(kind))
      throw InvariantViolation("PhiCriterion handles tilde2 and hat2 only");
    if (sample.size() == 0) throw InvariantViolation("empty sample");
    if (kind == CriterionKind::tilde2) {
      if (phi_.source() == PhiTriple::Source::fourier_ratio &&
          phi_.bundle().weight().theta_dependent())
        throw InvariantViolation(
            "tilde2 requires a parameter-free weight; use hat2 for "
            "parameter-dependent weights");
      if (sigma2 != 0.0)
        throw InvariantViolation("tilde2 does not center the Y^2 term");
    } else if (!(sigma2 >= 0.0)) {
      throw InvariantViolation("hat2 needs sigma2 >= 0");
    }
    for (double z : sample.z) z_scale_ = std::max(z_scale_, std::abs(z));
  }

  CriterionKind kind() const { return kind_; }
  double sigma2() const { return sigma2_; }
  const PhiTriple& phi() const { return phi_; }

  double value(const Vector& theta) const {
    if (ratio_based()) {
      const auto& t = ensure_core(theta);
      return detail::combine(core_, t[0].psi(), t[1].psi(), t[2].psi());
    }
    const auto bound = phi_.at(theta);
    const double s2 = centered_criterion(kind_) ? sigma2_ : 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < sample_.size(); ++i) {
      const double y = sample_.y[i], z = sample_.z[i];
      acc += (y * y - s2) * bound.value(3, z) - 2.0 * y * bound.value(2, z) +
             bound.value(1, z);
    }
    return acc / static_cast<double>(sample_.size());
  }

  Vector gradient(const Vector& theta) const {
    if (ratio_based()) {
      const auto& t = ensure_core(theta);
      const int d = t[0].dimension();
      Vector g(d);
      for (int k = 0; k < d; ++k)
        g[k] =
            detail::combine(core_, t[0].grad(k), t[1].grad(k), t[2].grad(k));
      return g;
    }
    const auto bound = phi_.at(theta);
    const double s2 = centered_criterion(kind_) ? sigma2_ : 0.0;
    Vector g = Vector::Zero(phi_.dimension());
    for (std::size_t i = 0; i < sample_.size(); ++i) {
      const double y = sample_.y[i], z = sample_.z[i];
      g += (y * y - s2) * bound.grad(3, z) - 2.0 * y * bound.grad(2, z) +
           bound.grad(1, z);
    }
    return g / static_cast<double>(sample_.size());
  }

  Matrix hessian(const Vector& theta) const {
    if (ratio_based()) {
      const auto& t = ensure_core(theta);
      const int d = t[0].dimension();
      Matrix h(d, d);
      for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l) {
          h(k, l) = detail::combine(core_, t[0].hess(k, l), t[1].hess(k, l),
                                    t[2].hess(k, l));
          h(l, k) = h(k, l);
        }
      return h;
    }
    const auto bound = phi_.at(theta);
    const double s2 = centered_criterion(kind_) ? sigma2_ : 0.0;
    const int d = phi_.dimension();
    Matrix h = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < sample_.size(); ++i) {
      const double y = sample_.y[i], z = sample_.z[i];
      h += (y * y - s2) * bound.hess(3, z) - 2.0 * y * bound.hess(2, z) +
           bound.hess(1, z);
    }
    return h / static_cast<double>(sample_.size());
  }

 private:
  bool ratio_based() const {
    return phi_.source() == PhiTriple::Source::fourier_ratio;
  }

  //! Builds the targets for theta, checks ratio integrability, and extends
  //! the frequency grid (with a safety factor for the derivative targets,
  //! whose envelopes carry a few extra polynomial degrees) when the
  //! truncation point outgrows the current one.
  const std::vector<WeightedTarget>& ensure_core(const Vector& theta) const {
    const auto& t = cache_.at(phi_.bundle(), theta);
    const auto s = phi_.noise().smoothness();
    double cut = 0.0;
    for (int p = 0; p < 3; ++p) {
      const auto& tup = t[static_cast<std::size_t>(p)].smoothness();
      require_ratio_integrable(tup, s, "psi_" + std::to_string(p));
      if (!tup.zero)
        cut = std::max(cut, ratio_cutoff(tup, s, opts_.ratio_tol));
    }
    cut *= 1.5;
    if (cut > core_hi_) {
      const std::vector<double> bounds{0.0, cut};
      const auto window = [this](double u) {
        return deconv_weight(phi_.noise(), u);
      };
      core_ = detail::make_core(bounds, z_scale_, opts_.panel_order,
                                opts_.refine, window);
      detail::fill_ecf(core_, sample_,
                       centered_criterion(kind_) ? sigma2_ : 0.0);
      core_hi_ = cut;
    }
    return t;
  }

  CriterionKind kind_;
  double sigma2_;
  PhiTriple phi_;
  CriterionOptions opts_;
  Sample sample_;
  double z_scale_ = 1.0;
  mutable detail::FreqCore core_;
  mutable double core_hi_ = 0.0;
  mutable detail::TargetCache cache_;
};

//! Pointwise evaluator of a kernel-smoothed target, (psi * K_{n,Cn})(z) with
//! the deconvolving kernel or (psi * K_Cn)(x) with the plain one.  The
//! spectral nodes and coefficients are precomputed, so each call is one pass
//! over the grid; intended for per-observation sweeps at large n.
class SmoothedEvaluator {
 public:
  SmoothedEvaluator(const TargetFunctions& psi, const KernelSpec& kernel,
                    const NoiseModel& noise, double cn, bool deconvolve,
                    double z_scale, int order = 16, int refine = 0) {
    if (!(cn > 0.0)) throw InvariantViolation("bandwidth must be positive");
    std::vector<double> bounds{0.0};
    for (double k : detail::kernel_knots(kernel)) bounds.push_back(k * cn);
    const auto window = [&](double u) {
      return kernel.ft(u / cn) * (deconvolve ? deconv_weight(noise, u) : 1.0);
    };
    const auto core = detail::make_core(bounds, z_scale, order, refine, window);
    u_ = core.u;
    coef_.resize(u_.size());
    for (std::size_t j = 0; j < u_.size(); ++j)
      coef_[j] = core.w[j] * psi.transform(u_[j]);
  }

  double operator()(double z) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < u_.size(); ++j)
      acc += (coef_[j] * std::exp(Complex(0.0, -u_[j] * z))).real();
    return acc / M_PI;
  }

 private:
  std::vector<double> u_;
  std::vector<Complex> coef_;
};

// ---- free-function forms -----------------------------------------------.

inline double criterion_tilde1(const Sample& sample, const Vector& theta,
                               const WeightSpec& w, const RegressionFamily& f,
                               const NoiseModel& noise, const KernelSpec& kernel,
                               double cn, CriterionOptions opts = {}) {
  return KernelCriterion(CriterionKind::tilde1, sample, w, f, noise, kernel,
                         cn, 0.0, opts)
      .value(theta);
}

inline double criterion_hat1(const Sample& sample, const Vector& theta,
                             const WeightSpec& w, const RegressionFamily& f,
                             const NoiseModel& noise, const KernelSpec& kernel,
                             double cn, double sigma2,
                             CriterionOptions opts = {}) {
  return KernelCriterion(CriterionKind::hat1, sample, w, f, noise, kernel, cn,
                         sigma2, opts)
      .value(theta);
}

inline double criterion_tilde2(const Sample& sample, const Vector& theta,
                               const PhiTriple& phi,
                               CriterionOptions opts = {}) {
  return PhiCriterion(CriterionKind::tilde2, sample, phi, 0.0, opts)
      .value(theta);
}

inline double criterion_hat2(const Sample& sample, const Vector& theta,
                             const PhiTriple& phi, double sigma2,
                             CriterionOptions opts = {}) {
  return PhiCriterion(CriterionKind::hat2, sample, phi, sigma2, opts)
      .value(theta);
}

}  // namespace eivreg
