#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eivreg/criteria.hpp"
#include "eivreg/design.hpp"
#include "eivreg/envelopes.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/minimize.hpp"
#include "eivreg/quadrature.hpp"
#include "eivreg/sample.hpp"

namespace eivreg {

struct CovarianceOptions {
  int draws = 100000;            // Monte Carlo size for the score covariance
  std::uint64_t seed = 20260825;
  int panel_order = 16;          // frequency grid for the windowed score
  double ratio_tol = 1e-12;      // envelope drop fixing the score truncation
  QuadratureSpec quad = {};
  TargetBuildOptions targets;
};

//! Limit Hessian of the population criterion at the truth,
//!   H = E[2 w_theta(X) (df/dtheta)(df/dtheta)^T],
//! by quadrature against the design density.  The same matrix serves all
//! four criteria.
inline Matrix population_hessian(const ModelBundle& model, const Vector& theta,
                                 const DesignDensity& design,
                                 const QuadratureSpec& spec = {}) {
  model.family.check_dimension(theta);
  const int d = model.family.dimension();
  Matrix h(d, d);
  for (int k = 0; k < d; ++k)
    for (int l = k; l < d; ++l) {
      const auto integrand = [&](double x) {
        const Vector g = model.family.grad(theta, x);
        return 2.0 * model.weight.value(x, theta) * g[k] * g[l] *
               design.density(x);
      };
      h(k, l) = integrate(integrand, design.quad_lo(), design.quad_hi(), spec);
      h(l, k) = h(k, l);
    }
  return h;
}

namespace detail {

//! Per-observation score of the windowed criteria in factored form.  The
//! population score is the inverse transform of the criterion derivative
//! over the noise characteristic function; its Y-dependence is polynomial,
//!   s_k(y, z) = A_k(z) - 2 y B_k(z) + (y^2 - sigma2) C_k(z),
//! where A, B, C invert the derivative transforms of w f^2, w f, and w.  The
//! three coefficient functions are evaluated in one pass over a shared
//! frequency grid per observation.
class FourierScore {
 public:
  FourierScore(const ModelBundle& model, const Vector& theta, double z_scale,
               const CovarianceOptions& opt)
      : d_(model.family.dimension()) {
    TargetBuildOptions topts = opt.targets;
    const auto s = model.noise.smoothness();

    TargetBundle probe_bundle(model.weight, model.family, topts);
    std::vector<WeightedTarget> built;
    double cut = 0.0;
    for (int p = 0; p < 3; ++p) {
      built.push_back(probe_bundle.build(p, theta));
      for (int k = 0; k < d_; ++k) {
        const auto& t = built.back().grad_smoothness(k);
        if (t.zero) continue;
        require_ratio_integrable(t, s, "score psi_" + std::to_string(p));
        cut = std::max(cut, ratio_cutoff(t, s, opt.ratio_tol));
      }
    }
    if (!(cut > 0.0))
      throw InvariantViolation("score transforms are identically zero");
    cut *= 1.5;

    // rebuild with the tabulation range covering the truncated integral
    if (topts.u_max < cut + 1.0) {
      topts.u_max = cut + 1.0;
      TargetBundle wide(model.weight, model.family, topts);
      built.clear();
      for (int p = 0; p < 3; ++p) built.push_back(wide.build(p, theta));
    }

    const FreqGrid grid =
        frequency_grid(0.0, cut, z_scale, opt.panel_order, 0);
    const std::size_t m = grid.node.size();
    u_ = grid.node;
    a_.assign(static_cast<std::size_t>(d_) * m, Complex(0.0));
    b_ = a_;
    c_ = a_;
    for (std::size_t j = 0; j < m; ++j) {
      const double u = u_[j];
      const double wj = grid.weight[j] * deconv_weight(model.noise, u);
      for (int k = 0; k < d_; ++k) {
        const std::size_t at = static_cast<std::size_t>(k) * m + j;
        if (!built[2].grad_smoothness(k).zero)
          a_[at] = wj * built[2].grad(k).transform(u);
        if (!built[1].grad_smoothness(k).zero)
          b_[at] = wj * built[1].grad(k).transform(u);
        if (!built[0].grad_smoothness(k).zero)
          c_[at] = wj * built[0].grad(k).transform(u);
      }
    }
  }

  Vector operator()(double y, double z, double sigma2) const {
    const std::size_t m = u_.size();
    Vector s = Vector::Zero(d_);
    const double cy = -2.0 * y;
    const double cyy = y * y - sigma2;
    for (std::size_t j = 0; j < m; ++j) {
      const Complex e = std::exp(Complex(0.0, -u_[j] * z));
      for (int k = 0; k < d_; ++k) {
        const std::size_t at = static_cast<std::size_t>(k) * m + j;
        s[k] += ((a_[at] + cy * b_[at] + cyy * c_[at]) * e).real();
      }
    }
    return s / M_PI;
  }

 private:
  int d_;
  std::vector<double> u_;
  std::vector<Complex> a_, b_, c_;  // row-major (component, node)
};

}  // namespace detail

//! Monte Carlo covariance of the per-observation score at theta.  Draws
//! (Y, Z) from the full data-generating process and averages centered outer
//! products.  The windowed criteria use the factored inverse-transform score;
//! the direct criteria differentiate their correction-function combination.
inline Matrix score_covariance(CriterionKind kind, const ModelBundle& model,
                               const Vector& theta,
                               const DesignDensity& design, const XiModel& xi,
                               const CovarianceOptions& opt = {}) {
  model.family.check_dimension(theta);
  if (!centered_criterion(kind) && model.sigma2 != 0.0)
    throw InvariantViolation(
        "uncentered criteria carry no sigma2; use a hat criterion");
  if (!centered_criterion(kind) && model.weight.theta_dependent())
    throw InvariantViolation(
        "uncentered criteria need a parameter-free weight");
  if (opt.draws < 2) throw InvariantViolation("score covariance needs draws >= 2");

  const int d = model.family.dimension();
  const std::size_t m = static_cast<std::size_t>(opt.draws);
  Rng rng(opt.seed);
  const Sample s =
      generate_sample(design, model.family, theta, xi, model.noise, m, rng);
  const double sigma2 = centered_criterion(kind) ? model.sigma2 : 0.0;

  std::vector<Vector> scores;
  scores.reserve(m);
  if (kernel_criterion(kind)) {
    double z_scale = 1.0;
    for (double z : s.z) z_scale = std::max(z_scale, std::abs(z));
    const detail::FourierScore score(model, theta, z_scale, opt);
    for (std::size_t i = 0; i < m; ++i)
      scores.push_back(score(s.y[i], s.z[i], sigma2));
  } else {
    const PhiTriple phi = make_phi_triple(model, opt.targets);
    const auto bound = phi.at(theta);
    for (std::size_t i = 0; i < m; ++i) {
      const double y = s.y[i], z = s.z[i];
      Vector v = bound.grad(1, z) - 2.0 * y * bound.grad(2, z);
      if (model.weight.theta_dependent())
        v += (y * y - sigma2) * bound.grad(3, z);
      scores.push_back(std::move(v));
    }
  }

  Vector mean = Vector::Zero(d);
  for (const auto& v : scores) mean += v;
  mean /= static_cast<double>(m);
  Matrix cov = Matrix::Zero(d, d);
  for (const auto& v : scores) {
    const Vector c = v - mean;
    cov += c * c.transpose();
  }
  return cov / static_cast<double>(m);
}

//! Limit covariance of sqrt(n) (theta_hat - theta): H^-1 Sigma_0 H^-1 with
//! the population Hessian H and the Monte Carlo score covariance Sigma_0.
//! Inversion goes through the eigendecomposition so the result is symmetric
//! by construction; an ill-conditioned H is refused.
inline Matrix sandwich_covariance(CriterionKind kind, const ModelBundle& model,
                                  const Vector& theta,
                                  const DesignDensity& design,
                                  const XiModel& xi,
                                  const CovarianceOptions& opt = {}) {
  const Matrix h = population_hessian(model, theta, design, opt.quad);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  if (eig.info() != Eigen::Success)
    throw SingularHessian("population Hessian eigendecomposition failed");
  const Vector ev = eig.eigenvalues();
  const double lo = ev.minCoeff(), hi = ev.maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw SingularHessian(
        "population Hessian is singular or nearly so (condition number above "
        "1e12)");
  const Matrix hinv = eig.eigenvectors() *
                      ev.cwiseInverse().asDiagonal() *
                      eig.eigenvectors().transpose();
  const Matrix s0 = score_covariance(kind, model, theta, design, xi, opt);
  Matrix out = hinv * s0 * hinv;
  out = 0.5 * (out + out.transpose()).eval();
  return out;
}

}  // namespace eivreg
