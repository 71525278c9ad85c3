#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eivreg/bandwidth.hpp"
#include "eivreg/criteria.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/phi.hpp"
#include "eivreg/sample.hpp"

namespace eivreg {

//! Everything the estimation side needs to know about the model: the weight
//! and regression family behind the weighted targets, the measurement-error
//! law, the smoothing kernel for the windowed criteria, and the known
//! regression-error variance used by the centered (hat) criteria.
struct ModelBundle {
  WeightSpec weight = WeightSpec::constant_one();
  RegressionFamily family = RegressionFamily::exponential();
  NoiseModel noise = NoiseModel::degenerate();
  KernelSpec kernel = KernelSpec::sinc();
  double sigma2 = 0.0;
};

//! Correction-function triple for the direct criteria, picking the closed
//! form when one exists for the pairing and falling back to the transform
//! ratio construction otherwise.
inline PhiTriple make_phi_triple(const ModelBundle& m,
                                 TargetBuildOptions opts = {}) {
  if (m.weight.name() == "constantOne") {
    if (m.family.name() == "exponential") return PhiTriple::exponential(m.noise);
    if (m.family.name() == "cosineSum")
      return PhiTriple::cosine(m.noise, m.family.dimension());
  }
  return PhiTriple::fourier_ratio(m.weight, m.family, m.noise, opts);
}

//! How the cutoff is resolved for the kernel-smoothed criteria: a fixed
//! value, or the rate-optimal rule evaluated at the sample size.
struct BandwidthSpec {
  enum class Mode { manual, from_rate };
  Mode mode = Mode::manual;
  double value = 1.0;
  RateSpec rate;

  static BandwidthSpec manual(double cn) {
    BandwidthSpec b;
    b.mode = Mode::manual;
    b.value = cn;
    return b;
  }
  static BandwidthSpec from_rate(RateSpec r) {
    BandwidthSpec b;
    b.mode = Mode::from_rate;
    b.rate = r;
    return b;
  }
};

struct OptimizerOptions {
  enum class Mode { grid_then_local, local_only };
  Mode mode = Mode::grid_then_local;
  int grid_points = 15;         // lattice points per parameter dimension
  int max_iterations = 200;     // local refinement cap
  double gradient_tol = 1e-7;   // relative to the criterion scale seen so far
  double boundary_tol = 1e-6;   // box-edge proximity flag, relative to width
  Vector start;                 // local_only initial point
};

struct EstimatorConfig {
  CriterionKind kind = CriterionKind::tilde1;
  Vector box_lo, box_hi;        // search box; defaults to the family box
  BandwidthSpec bandwidth;      // kernel criteria only
  OptimizerOptions optimizer;
  CriterionOptions criterion;
};

struct OptimizerTrace {
  int iterations = 0;
  double gradient_norm = 0.0;
  bool stalled = false;  // iteration cap hit above the gradient tolerance
};

struct EstimateResult {
  Vector theta;
  double value = 0.0;
  double cn = 0.0;          // cutoff used; zero for the direct criteria
  bool cn_clamped = false;  // rate rule fell back to the clamp
  bool unit_rate_constants = false;  // cn came from the unit-constant rule
  OptimizerTrace trace;
  bool boundary = false;    // theta within tolerance of the box edge
  std::optional<Matrix> covariance;
};

//! Objective callbacks for the box minimizer.  The gradient is required; the
//! Hessian may be absent, in which case refinement uses damped gradient
//! steps.
struct BoxObjective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
};

namespace detail {

inline Vector clip_to_box(Vector x, const Vector& lo, const Vector& hi) {
  for (int k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
  return x;
}

//! Gradient components pointing out of the box at an active bound carry no
//! usable descent and are zeroed before the stopping test.
inline Vector projected_gradient(const Vector& g, const Vector& x,
                                 const Vector& lo, const Vector& hi) {
  Vector p = g;
  for (int k = 0; k < g.size(); ++k) {
    if (x[k] <= lo[k] && g[k] > 0.0) p[k] = 0.0;
    if (x[k] >= hi[k] && g[k] < 0.0) p[k] = 0.0;
  }
  return p;
}

}  // namespace detail

struct MinimizeSummary {
  Vector x;
  double value = 0.0;
  OptimizerTrace trace;
  bool boundary = false;
};

//! Deterministic box-constrained minimization: a full lattice sweep seeds a
//! damped projected-Newton refinement with Armijo backtracking.  Every
//! stopping test is scaled by the largest criterion magnitude seen, so
//! multiplying the objective by a positive constant leaves the iterate path
//! unchanged.  No randomness anywhere; identical inputs give identical
//! traces.
inline MinimizeSummary minimize_box(const BoxObjective& f, const Vector& lo,
                                    const Vector& hi,
                                    const OptimizerOptions& opt) {
  const int d = static_cast<int>(lo.size());
  if (hi.size() != d || d == 0)
    throw InvariantViolation("search box endpoints must share a dimension");
  for (int k = 0; k < d; ++k) {
    if (!std::isfinite(lo[k]) || !std::isfinite(hi[k]) || !(lo[k] < hi[k]))
      throw InvariantViolation("search box must be bounded with lo < hi");
  }
  if (!f.value || !f.gradient)
    throw InvariantViolation("objective needs value and gradient callbacks");

  Vector x;
  double fx = 0.0;
  double scale = 0.0;  // criterion magnitude scale for the stopping tests
  if (opt.mode == OptimizerOptions::Mode::grid_then_local) {
    if (opt.grid_points < 3)
      throw InvariantViolation("grid search needs at least 3 points per axis");
    const int g = opt.grid_points;
    long total = 1;
    for (int k = 0; k < d; ++k) {
      total *= g;
      if (total > 1000000)
        throw InvariantViolation("grid too large; reduce points or dimension");
    }
    std::vector<int> idx(d, 0);
    for (long c = 0; c < total; ++c) {
      Vector p(d);
      long rem = c;
      for (int k = 0; k < d; ++k) {
        idx[k] = static_cast<int>(rem % g);
        rem /= g;
        p[k] = lo[k] + (hi[k] - lo[k]) * idx[k] / (g - 1);
      }
      const double v = f.value(p);
      scale = std::max(scale, std::abs(v));
      if (c == 0 || v < fx) {
        fx = v;
        x = p;
      }
    }
  } else {
    if (opt.start.size() != d)
      throw InvariantViolation("local_only needs a start of the box dimension");
    x = detail::clip_to_box(opt.start, lo, hi);
    fx = f.value(x);
    scale = std::abs(fx);
  }
  if (scale == 0.0) scale = 1.0;  // identically flat start; any step suffices

  MinimizeSummary out;
  Vector grad = f.gradient(x);
  Vector pg = detail::projected_gradient(grad, x, lo, hi);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (pg.norm() <= opt.gradient_tol * scale) break;

    // Newton direction, with a diagonal shift escalated until the direction
    // descends; without a Hessian fall back to the gradient at box scale
    Vector dir;
    bool have_dir = false;
    if (f.hessian) {
      const Matrix h = f.hessian(x);
      double shift = 0.0;
      const double base = h.diagonal().cwiseAbs().maxCoeff();
      for (int round = 0; round < 12 && !have_dir; ++round) {
        Matrix hs = h;
        if (shift > 0.0)
          hs += shift * Matrix::Identity(d, d);
        Eigen::LDLT<Matrix> ldlt(hs);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
          dir = -ldlt.solve(grad);
          if (grad.dot(dir) < 0.0) have_dir = true;
        }
        shift = shift == 0.0 ? std::max(base, 1e-12 * scale) * 1e-6
                             : shift * 10.0;
      }
    }
    if (!have_dir) {
      const double width = (hi - lo).maxCoeff();
      dir = -grad * (0.25 * width / std::max(pg.norm(), 1e-300));
    }

    // Armijo backtracking on the clipped step
    bool moved = false;
    double alpha = 1.0;
    for (int halvings = 0; halvings < 45; ++halvings, alpha *= 0.5) {
      const Vector xn = detail::clip_to_box(x + alpha * dir, lo, hi);
      const Vector dx = xn - x;
      if (dx.cwiseAbs().maxCoeff() == 0.0) break;  // step fully clipped away
      const double fn = f.value(xn);
      if (fn - fx <= 1e-4 * grad.dot(dx)) {
        x = xn;
        fx = fn;
        moved = true;
        break;
      }
    }
    if (!moved) break;  // no acceptable step at any scale: local floor reached

    grad = f.gradient(x);
    pg = detail::projected_gradient(grad, x, lo, hi);
  }

  out.x = x;
  out.value = fx;
  out.trace.iterations = it;
  out.trace.gradient_norm = pg.norm();
  out.trace.stalled = pg.norm() > opt.gradient_tol * scale;
  for (int k = 0; k < d; ++k) {
    const double edge = opt.boundary_tol * (hi[k] - lo[k]);
    if (x[k] - lo[k] <= edge || hi[k] - x[k] <= edge) out.boundary = true;
  }
  return out;
}

//! Fits the criterion named by the config on one sample.  Builds the
//! criterion object once (empirical characteristic moments are precomputed),
//! resolves the cutoff for the kernel criteria, and runs the deterministic
//! box minimizer over the configured parameter box.
inline EstimateResult minimize_criterion(const EstimatorConfig& config,
                                         const Sample& sample,
                                         const ModelBundle& model) {
  const int d = model.family.dimension();
  Vector lo = config.box_lo.size() ? config.box_lo : model.family.box_lo();
  Vector hi = config.box_hi.size() ? config.box_hi : model.family.box_hi();
  if (lo.size() != d || hi.size() != d)
    throw DimensionMismatch("search box does not match the family dimension");

  EstimateResult result;

  // the uncentered criteria reject a nonzero sigma2 by design; a bundle may
  // still carry the known variance for use by their centered counterparts
  const double sigma2 = centered_criterion(config.kind) ? model.sigma2 : 0.0;

  std::unique_ptr<KernelCriterion> kc;
  std::unique_ptr<PhiCriterion> pc;
  if (kernel_criterion(config.kind)) {
    double cn = config.bandwidth.value;
    if (config.bandwidth.mode == BandwidthSpec::Mode::from_rate) {
      const BandwidthChoice choice = select_bandwidth(
          config.bandwidth.rate, static_cast<double>(sample.size()));
      cn = choice.value;
      result.cn_clamped = choice.clamped;
      result.unit_rate_constants = choice.unit_constants;
    }
    result.cn = cn;
    kc = std::make_unique<KernelCriterion>(config.kind, sample, model.weight,
                                           model.family, model.noise,
                                           model.kernel, cn, sigma2,
                                           config.criterion);
  } else {
    pc = std::make_unique<PhiCriterion>(
        config.kind, sample,
        make_phi_triple(model, config.criterion.targets), sigma2,
        config.criterion);
  }

  BoxObjective obj;
  if (kc) {
    obj.value = [&](const Vector& t) { return kc->value(t); };
    obj.gradient = [&](const Vector& t) { return kc->gradient(t); };
    obj.hessian = [&](const Vector& t) { return kc->hessian(t); };
  } else {
    obj.value = [&](const Vector& t) { return pc->value(t); };
    obj.gradient = [&](const Vector& t) { return pc->gradient(t); };
    obj.hessian = [&](const Vector& t) { return pc->hessian(t); };
  }

  const MinimizeSummary s = minimize_box(obj, lo, hi, config.optimizer);
  result.theta = s.x;
  result.value = s.value;
  result.trace = s.trace;
  result.boundary = s.boundary;
  return result;
}

}  // namespace eivreg
