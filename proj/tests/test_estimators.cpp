#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "eivreg/bandwidth.hpp"
#include "eivreg/covariance.hpp"
#include "eivreg/minimize.hpp"
#include "eivreg/sample.hpp"

using namespace eivreg;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

RateSpec rate(double a, double b, double r, double alpha = 0.0,
              double beta = 0.0, double rho = 0.0) {
  RateSpec rs;
  rs.a = a;
  rs.b = b;
  rs.r = r;
  rs.alpha = alpha;
  rs.beta = beta;
  rs.rho = rho;
  return rs;
}

//! Scalar minimizer independent of the library optimizer: dense scan plus a
//! golden-section polish around the best cell.
double scan_min(const std::function<double(double)>& f, double lo, double hi) {
  const int n = 20000;
  int best = 0;
  double fbest = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double t = lo + (hi - lo) * i / n;
    const double v = f(t);
    if (v < fbest) {
      fbest = v;
      best = i;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best - 1) / n;
  double b = lo + (hi - lo) * std::min(n, best + 1) / n;
  const double inv = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv * (b - a), d = a + inv * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-11) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("cutoff rule pins the polynomial-regime powers", "[estimators]") {
  // light target against power-decay noise: variance saturates first
  const auto slow = select_bandwidth(rate(1.0, 0.0, 0.0, 2.0), 1e4);
  CHECK(slow.value == Catch::Approx(10.0).epsilon(1e-12));
  CHECK(slow.regime == "polynomial-variance");
  CHECK_FALSE(slow.clamped);
  CHECK(slow.unit_constants);

  // heavy target: the bias exponent takes over past a = alpha + 1/2
  const auto fast = select_bandwidth(rate(3.0, 0.0, 0.0, 2.0), 32.0);
  CHECK(fast.value == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(fast.regime == "polynomial-bias");

  // the two power formulas agree where the branch switches
  const double left = select_bandwidth(rate(2.5 - 1e-9, 0.0, 0.0, 2.0), 777.0).value;
  const double right = select_bandwidth(rate(2.5, 0.0, 0.0, 2.0), 777.0).value;
  CHECK(left == Catch::Approx(right).epsilon(1e-6));

  const Bandwidth carrier = slow.bandwidth();
  CHECK(carrier.rule == Bandwidth::Rule::manual);
  CHECK(carrier.value == slow.value);
}

TEST_CASE("cutoff rule pins the exponential-regime log forms", "[estimators]") {
  // fast target, power noise: C = [log n / (2b) + c log log n / (2b)]^{1/r},
  // and the correction constant vanishes for a = 0, r = 2
  const auto tgt = select_bandwidth(rate(0.0, 1.0, 2.0, 2.0), 1e3);
  CHECK(tgt.regime == "target-exponential");
  CHECK(tgt.value == Catch::Approx(1.8584610944249191).epsilon(1e-12));

  // power target, fast noise; the smoothness tuple of a unit-sigma gaussian
  const auto g = NoiseModel::gaussian(1.0).smoothness();
  const auto noise = select_bandwidth(rate(1.0, 0.0, 0.0, g.alpha, g.beta, g.rho), 1e4);
  CHECK(noise.regime == "noise-exponential");
  CHECK(noise.value == Catch::Approx(2.8460809842294124).epsilon(1e-12));

  // both sides fast: the faster decay order wins
  const auto tw = select_bandwidth(rate(0.0, 1.0, 3.0, 0.0, 0.5, 2.0), 1e4);
  CHECK(tw.regime == "both-exponential-target");
  CHECK(tw.value == Catch::Approx(1.6637263492000494).epsilon(1e-12));

  const auto nw = select_bandwidth(rate(0.0, 1.0, 1.0, 0.0, 0.5, 2.0), 1e4);
  CHECK(nw.regime == "both-exponential-noise");
  CHECK(nw.value == Catch::Approx(2.8460809842294124).epsilon(1e-12));

  // fully matched decay scales: the polynomial gap breaks the tie
  const auto tie_t = select_bandwidth(rate(1.0, 0.5, 2.0, 0.0, 0.5, 2.0), 1e4);
  CHECK(tie_t.regime == "both-exponential-target");
  CHECK(tie_t.value == Catch::Approx(2.643863378771365).epsilon(1e-12));
  const auto tie_n = select_bandwidth(rate(0.0, 0.5, 2.0, 0.0, 0.5, 2.0), 1e4);
  CHECK(tie_n.regime == "both-exponential-noise");
  CHECK(tie_n.value == Catch::Approx(3.034854258770293).epsilon(1e-12));
}

TEST_CASE("cutoff rule clamps degenerate corners and rejects bad specs",
          "[estimators]") {
  // no decay on either side and too little bias either: nothing to balance
  const auto flat = select_bandwidth(rate(0.3, 0.0, 0.0), 1e4);
  CHECK(flat.value == 1.0);
  CHECK(flat.clamped);
  CHECK(flat.regime == "polynomial-degenerate");

  // same corner with enough bias decay recovers the bias power
  const auto bias = select_bandwidth(rate(2.0, 0.0, 0.0), 1e3);
  CHECK(bias.value == Catch::Approx(10.0).epsilon(1e-12));
  CHECK_FALSE(bias.clamped);

  // a heavy log correction pushes the bracket negative at small n; the
  // choice falls back to the clamp instead of a shrinking cutoff
  const RateSpec heavy = rate(0.0, 0.0, 0.0, 3.0, 0.25, 2.0);
  const auto small = select_bandwidth(heavy, 2.0);
  CHECK(small.value == 1.0);
  CHECK(small.clamped);
  CHECK(select_bandwidth(heavy, 1e3).clamped);
  const auto large = select_bandwidth(heavy, 1e6);
  CHECK_FALSE(large.clamped);
  CHECK(large.value == Catch::Approx(2.0972475892647617).epsilon(1e-12));

  CHECK_THROWS_AS(select_bandwidth(rate(1.0, 0.0, 0.0, 2.0), 1.0),
                  InvariantViolation);
  CHECK_THROWS_AS(select_bandwidth(rate(-1.0, 0.0, 0.0, 2.0), 100.0),
                  InvariantViolation);
  CHECK_THROWS_AS(select_bandwidth(rate(1.0, -0.5, 0.0, 2.0), 100.0),
                  InvariantViolation);
  // beta without rho is a contradiction, not a silent fallback
  CHECK_THROWS_AS(select_bandwidth(rate(1.0, 0.0, 0.0, 0.0, 1.0, 0.0), 100.0),
                  InvariantViolation);
}

TEST_CASE("cutoff rule is nondecreasing in the sample size", "[estimators]") {
  const std::vector<RateSpec> specs = {
      rate(1.0, 0.0, 0.0, 2.0),          // variance power
      rate(3.0, 0.0, 0.0, 2.0),          // bias power
      rate(0.0, 1.0, 2.0, 2.0),          // target exponential
      rate(0.0, 0.0, 0.0, 3.0, 0.25, 2.0),  // noise exponential, heavy correction
      rate(0.0, 1.0, 1.0, 0.0, 0.5, 2.0),   // both exponential, noise side
  };
  const std::vector<double> ns = {2,    5,    10,   50,  100, 1e3,
                                  1e4,  1e5,  1e6,  1e7};
  for (const auto& rs : specs) {
    double prev = 0.0;
    for (double n : ns) {
      const double cn = select_bandwidth(rs, n).value;
      CHECK(cn >= prev - 1e-12);
      CHECK(cn >= 1.0);
      prev = cn;
    }
  }
}

TEST_CASE("rate specs fold fitted envelopes into the worst case",
          "[estimators]") {
  // fitted polynomial exponents can dip below zero; the spec floors them
  R1Tuple fitted;
  fitted.a = -0.7;
  fitted.b = 2.0;
  fitted.r = 2.0;
  const auto rs = make_rate_spec(fitted, NoiseModel::gaussian(0.5).smoothness());
  CHECK(rs.a == 0.0);
  CHECK(rs.b == 2.0);
  CHECK(rs.r == 2.0);
  CHECK(rs.alpha == 0.0);
  CHECK(rs.beta == Catch::Approx(0.125));
  CHECK(rs.rho == 2.0);

  // half-specified exponential decay degrades to the polynomial reading
  R1Tuple half;
  half.a = 1.5;
  half.r = 2.0;
  half.b = 0.0;
  const auto hs = make_rate_spec(half, NoiseModel::laplace_symmetric(0.3).smoothness());
  CHECK(hs.r == 0.0);
  CHECK(hs.b == 0.0);
  CHECK(hs.a == 1.5);
  CHECK(hs.alpha == 2.0);
  CHECK(hs.rho == 0.0);

  R1Tuple t1, t2, t3, z;
  t1.a = 2.0; t1.b = 1.0; t1.r = 2.0;
  t2.a = 1.0; t2.b = 0.5; t2.r = 2.0;
  t3.a = 3.0;                        // power decay only
  z.zero = true;                     // vanishing component, no constraint
  const auto s = NoiseModel::laplace_symmetric(0.3).smoothness();

  const auto w1 = worst_rate_spec({t1, z, t2}, s);
  CHECK(w1.a == 1.0);
  CHECK(w1.b == 0.5);
  CHECK(w1.r == 2.0);

  // one power-decay member drags the whole set to power decay
  const auto w2 = worst_rate_spec({t1, t3}, s);
  CHECK(w2.r == 0.0);
  CHECK(w2.b == 0.0);
  CHECK(w2.a == 2.0);

  CHECK_THROWS_AS(worst_rate_spec({z, z}, s), InvariantViolation);
  CHECK_THROWS_AS(worst_rate_spec({}, s), InvariantViolation);
}

TEST_CASE("window bookkeeping decays along the cutoff rule", "[estimators]") {
  TargetFunctions psi;
  psi.transform = [](double u) { return Complex(std::exp(-0.25 * u * u)); };
  const auto noise = NoiseModel::laplace_symmetric(0.3);
  const auto kernel = KernelSpec::sinc();
  const RateSpec rs = rate(0.0, 0.25, 2.0, 2.0);

  double prev = std::numeric_limits<double>::infinity();
  double last = 0.0;
  for (double n : {1e2, 1e3, 1e4}) {
    const double cn = select_bandwidth(rs, n).value;
    const auto sc = smoothing_condition(psi, noise, kernel, cn, n);
    CHECK(sc.bias_sq >= 0.0);
    CHECK(sc.variance_sq > 0.0);
    CHECK(sc.total == Catch::Approx(sc.bias_sq + sc.variance_sq / n));
    CHECK(sc.total < prev);
    prev = sc.total;
    last = sc.total;
  }
  CHECK(last < 1e-3);

  // heavy-tailed transform: the absolute tail norm cannot be certified but
  // the squared one settles, and the bookkeeping takes the better of the two
  TargetFunctions slow;
  slow.transform = [](double u) { return Complex(std::pow(1.0 + u * u, -0.6)); };
  const auto sc = smoothing_condition(slow, noise, kernel, 5.0, 1e4);
  CHECK(std::isfinite(sc.total));
  CHECK(sc.bias_sq > 0.0);

  // slower still: neither norm can be certified, and the check refuses
  // rather than report a bound it cannot stand behind
  TargetFunctions slower;
  slower.transform = [](double u) { return Complex(std::pow(1.0 + u * u, -0.45)); };
  CHECK_THROWS_AS(smoothing_condition(slower, noise, kernel, 5.0, 1e4),
                  TailNotIntegrable);

  // no decay at all: neither norm settles
  TargetFunctions flat;
  flat.transform = [](double) { return Complex(1.0); };
  CHECK_THROWS_AS(smoothing_condition(flat, noise, kernel, 5.0, 1e4),
                  TailNotIntegrable);

  CHECK_THROWS_AS(smoothing_condition(psi, noise, kernel, 0.0, 1e4),
                  InvariantViolation);
  CHECK_THROWS_AS(smoothing_condition(psi, noise, kernel, 5.0, 0.5),
                  InvariantViolation);
}

TEST_CASE("box minimizer solves a quadratic bowl to machine precision",
          "[estimators]") {
  Matrix a(2, 2);
  a << 4.0, 1.0, 1.0, 3.0;
  const Vector p = vec({0.3, -0.7});
  BoxObjective f;
  f.value = [&](const Vector& x) { return (x - p).dot(a * (x - p)); };
  f.gradient = [&](const Vector& x) { return Vector(2.0 * a * (x - p)); };
  f.hessian = [&](const Vector&) { return Matrix(2.0 * a); };

  const auto s = minimize_box(f, vec({-2.0, -2.0}), vec({2.0, 2.0}), {});
  CHECK((s.x - p).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(s.value <= 1e-15);
  CHECK_FALSE(s.trace.stalled);
  CHECK_FALSE(s.boundary);
  CHECK(s.trace.iterations <= 10);
}

TEST_CASE("box minimizer path is invariant under objective rescaling",
          "[estimators]") {
  Matrix a(2, 2);
  a << 4.0, 1.0, 1.0, 3.0;
  const Vector p = vec({0.3, -0.7});
  const double c = 4.0;  // power of two: every float op rescales exactly
  BoxObjective f, fc;
  f.value = [&](const Vector& x) { return (x - p).dot(a * (x - p)); };
  f.gradient = [&](const Vector& x) { return Vector(2.0 * a * (x - p)); };
  f.hessian = [&](const Vector&) { return Matrix(2.0 * a); };
  fc.value = [&](const Vector& x) { return c * f.value(x); };
  fc.gradient = [&](const Vector& x) { return Vector(c * f.gradient(x)); };
  fc.hessian = [&](const Vector& x) { return Matrix(c * f.hessian(x)); };

  const Vector lo = vec({-2.0, -2.0}), hi = vec({2.0, 2.0});
  const auto s1 = minimize_box(f, lo, hi, {});
  const auto s2 = minimize_box(fc, lo, hi, {});
  CHECK(s1.x[0] == s2.x[0]);
  CHECK(s1.x[1] == s2.x[1]);
  CHECK(s1.trace.iterations == s2.trace.iterations);
  CHECK(s2.value == c * s1.value);
}

TEST_CASE("box minimizer lattice sweep escapes the tilted double well",
          "[estimators]") {
  BoxObjective f;
  f.value = [](const Vector& x) {
    const double t = x[0] * x[0] - 1.0;
    return t * t + 0.3 * x[0];
  };
  f.gradient = [](const Vector& x) {
    Vector g(1);
    g[0] = 4.0 * x[0] * (x[0] * x[0] - 1.0) + 0.3;
    return g;
  };
  f.hessian = [](const Vector& x) {
    Matrix h(1, 1);
    h(0, 0) = 12.0 * x[0] * x[0] - 4.0;
    return h;
  };
  const Vector lo = vec({-2.0}), hi = vec({2.0});

  // the global well sits left of the hill; the sweep must find it
  const auto s = minimize_box(f, lo, hi, {});
  CHECK(s.x[0] == Catch::Approx(-1.0355787140888542).margin(1e-6));
  CHECK(s.value == Catch::Approx(-0.30542848374391596).margin(1e-9));

  // a purely local start in the right well stays there
  OptimizerOptions local;
  local.mode = OptimizerOptions::Mode::local_only;
  local.start = vec({0.5});
  const auto r = minimize_box(f, lo, hi, local);
  CHECK(r.x[0] == Catch::Approx(0.9601495555191059).margin(1e-6));
}

TEST_CASE("box minimizer accounts for bounds, stalls, and bad input",
          "[estimators]") {
  // descent pinned to the lower edge: boundary is flagged, not a stall
  BoxObjective lin;
  lin.value = [](const Vector& x) { return x[0]; };
  lin.gradient = [](const Vector& x) { return Vector(Vector::Ones(x.size())); };
  const auto edge = minimize_box(lin, vec({0.0}), vec({1.0}), {});
  CHECK(edge.x[0] == 0.0);
  CHECK(edge.boundary);
  CHECK_FALSE(edge.trace.stalled);

  Matrix a(2, 2);
  a << 4.0, 1.0, 1.0, 3.0;
  const Vector p = vec({0.3, -0.7});
  BoxObjective bowl;
  bowl.value = [&](const Vector& x) { return (x - p).dot(a * (x - p)); };
  bowl.gradient = [&](const Vector& x) { return Vector(2.0 * a * (x - p)); };

  // iteration budget of zero leaves the lattice winner and reports the stall
  OptimizerOptions capped;
  capped.max_iterations = 0;
  const auto stuck = minimize_box(bowl, vec({-2.0, -2.0}), vec({2.0, 2.0}), capped);
  CHECK(stuck.trace.stalled);
  CHECK(stuck.trace.iterations == 0);

  // no hessian callback: damped gradient refinement still converges
  OptimizerOptions grad_only;
  grad_only.mode = OptimizerOptions::Mode::local_only;
  grad_only.start = vec({-1.5, 1.5});
  grad_only.max_iterations = 2000;
  const auto gd = minimize_box(bowl, vec({-2.0, -2.0}), vec({2.0, 2.0}), grad_only);
  CHECK((gd.x - p).cwiseAbs().maxCoeff() <= 1e-5);

  // a start outside the box is clipped in, not rejected
  OptimizerOptions outside;
  outside.mode = OptimizerOptions::Mode::local_only;
  outside.start = vec({5.0, 5.0});
  const auto clipped = minimize_box(bowl, vec({-2.0, -2.0}), vec({2.0, 2.0}), outside);
  CHECK((clipped.x - p).cwiseAbs().maxCoeff() <= 1e-5);

  CHECK_THROWS_AS(minimize_box(bowl, vec({0.0}), vec({1.0, 2.0}), {}),
                  InvariantViolation);
  CHECK_THROWS_AS(minimize_box(bowl, vec({1.0, 1.0}), vec({1.0, 2.0}), {}),
                  InvariantViolation);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(minimize_box(bowl, vec({-inf, 0.0}), vec({1.0, 2.0}), {}),
                  InvariantViolation);

  BoxObjective no_grad;
  no_grad.value = [](const Vector& x) { return x.squaredNorm(); };
  CHECK_THROWS_AS(minimize_box(no_grad, vec({-1.0}), vec({1.0}), {}),
                  InvariantViolation);

  OptimizerOptions tiny_grid;
  tiny_grid.grid_points = 2;
  CHECK_THROWS_AS(minimize_box(bowl, vec({-1.0, -1.0}), vec({1.0, 1.0}), tiny_grid),
                  InvariantViolation);

  OptimizerOptions no_start;
  no_start.mode = OptimizerOptions::Mode::local_only;
  CHECK_THROWS_AS(minimize_box(bowl, vec({-1.0, -1.0}), vec({1.0, 1.0}), no_start),
                  InvariantViolation);

  // 15^8 lattice points would never finish; refused up front
  BoxObjective big;
  big.value = [](const Vector& x) { return x.squaredNorm(); };
  big.gradient = [](const Vector& x) { return Vector(2.0 * x); };
  const Vector lo8 = Vector::Constant(8, -1.0), hi8 = Vector::Constant(8, 1.0);
  CHECK_THROWS_AS(minimize_box(big, lo8, hi8, {}), InvariantViolation);
}

TEST_CASE("direct fit recovers the truth on clean data", "[estimators]") {
  ModelBundle model{WeightSpec::constant_one(), RegressionFamily::exponential(),
                    NoiseModel::degenerate()};
  Rng rng(91001);
  const Sample s = generate_sample(DesignDensity::gaussian(0.0, 1.0),
                                   model.family, vec({0.4}), XiModel::zero(),
                                   model.noise, 200, rng);

  EstimatorConfig cfg;
  cfg.kind = CriterionKind::tilde2;
  cfg.box_lo = vec({0.1});
  cfg.box_hi = vec({0.8});
  const auto r = minimize_criterion(cfg, s, model);

  CHECK(r.theta[0] == Catch::Approx(0.4).margin(1e-8));
  CHECK(r.cn == 0.0);
  CHECK_FALSE(r.boundary);
  CHECK_FALSE(r.trace.stalled);

  // exact data leave no residual, so the fitted criterion bottoms out at zero
  CHECK(std::abs(r.value) < 1e-12);
}

TEST_CASE("direct fit matches an exhaustive scalar search", "[estimators]") {
  const auto noise = NoiseModel::laplace_symmetric(0.3);
  ModelBundle model{WeightSpec::constant_one(), RegressionFamily::exponential(),
                    noise};
  Rng rng(91002);
  const Sample s = generate_sample(DesignDensity::gaussian(0.0, 1.0),
                                   model.family, vec({0.3}),
                                   XiModel::gaussian(0.4), noise, 400, rng);

  const PhiCriterion crit(CriterionKind::tilde2, s, PhiTriple::exponential(noise));
  const double oracle = scan_min(
      [&](double t) { return crit.value(vec({t})); }, 0.05, 0.85);

  EstimatorConfig cfg;
  cfg.kind = CriterionKind::tilde2;
  cfg.box_lo = vec({0.05});
  cfg.box_hi = vec({0.85});
  const auto r = minimize_criterion(cfg, s, model);
  CHECK(r.theta[0] == Catch::Approx(oracle).margin(1e-6));
}

TEST_CASE("windowed fit tracks the truth at moderate noise", "[estimators]") {
  const auto noise = NoiseModel::laplace_symmetric(0.3);
  ModelBundle model{WeightSpec::gaussian_damp(0.5), RegressionFamily::exponential(),
                    noise};
  Rng rng(91003);
  const Sample s = generate_sample(DesignDensity::gaussian(0.0, 1.0),
                                   model.family, vec({0.3}),
                                   XiModel::gaussian(0.4), noise, 2000, rng);

  EstimatorConfig cfg;
  cfg.kind = CriterionKind::tilde1;
  cfg.box_lo = vec({0.05});
  cfg.box_hi = vec({0.85});
  cfg.bandwidth = BandwidthSpec::manual(3.0);
  const auto r = minimize_criterion(cfg, s, model);
  CHECK(r.cn == 3.0);
  CHECK_FALSE(r.cn_clamped);
  CHECK_FALSE(r.unit_rate_constants);
  CHECK(r.theta[0] == Catch::Approx(0.3).margin(0.1));

  // the rate rule resolves the cutoff from the sample size and says so
  cfg.bandwidth = BandwidthSpec::from_rate(rate(0.0, 0.5, 2.0, 2.0));
  const auto r2 = minimize_criterion(cfg, s, model);
  CHECK(r2.cn == Catch::Approx(2.7569734238004693).epsilon(1e-12));
  CHECK(r2.unit_rate_constants);
  CHECK_FALSE(r2.cn_clamped);
  CHECK(r2.theta[0] == Catch::Approx(0.3).margin(0.1));
}

TEST_CASE("centered criteria consume the known variance, uncentered ignore it",
          "[estimators]") {
  const auto noise = NoiseModel::laplace_symmetric(0.3);
  Rng rng(91004);
  const auto family = RegressionFamily::exponential();
  const Sample s = generate_sample(DesignDensity::gaussian(0.0, 1.0), family,
                                   vec({0.3}), XiModel::gaussian(0.4), noise,
                                   300, rng);

  // the criterion values differ by exactly the variance shift
  const PhiTriple phi = PhiTriple::exponential(noise);
  const PhiCriterion plain(CriterionKind::tilde2, s, phi);
  const PhiCriterion centered(CriterionKind::hat2, s, phi, 0.25);
  const Vector th = vec({0.3});
  CHECK(centered.value(th) - plain.value(th) == Catch::Approx(-0.25).margin(1e-12));

  // a bundle may carry sigma2 for the centered kinds; the uncentered fit
  // must neither reject nor consume it
  ModelBundle with_s2{WeightSpec::constant_one(), family, noise};
  with_s2.sigma2 = 0.25;
  ModelBundle without{WeightSpec::constant_one(), family, noise};

  EstimatorConfig cfg;
  cfg.kind = CriterionKind::tilde2;
  cfg.box_lo = vec({0.05});
  cfg.box_hi = vec({0.85});
  const auto a = minimize_criterion(cfg, s, with_s2);
  const auto b = minimize_criterion(cfg, s, without);
  CHECK(a.theta[0] == b.theta[0]);

  // the centered fit shares the gradient, so the minimizer agrees too
  cfg.kind = CriterionKind::hat2;
  const auto c = minimize_criterion(cfg, s, with_s2);
  CHECK(c.theta[0] == Catch::Approx(b.theta[0]).margin(1e-6));
  CHECK(c.value - b.value == Catch::Approx(-0.25).margin(1e-9));
}

TEST_CASE("population hessian matches closed forms", "[estimators]") {
  // unit weight, exponential curve, standard normal design:
  // H = 2 E[X^2 e^{2 theta X}] = 2 (1 + 4 theta^2) e^{2 theta^2}
  ModelBundle exp_model{WeightSpec::constant_one(), RegressionFamily::exponential(),
                        NoiseModel::degenerate()};
  const Matrix h = population_hessian(exp_model, vec({0.3}),
                                      DesignDensity::gaussian(0.0, 1.0));
  REQUIRE(h.rows() == 1);
  CHECK(h(0, 0) == Catch::Approx(3.256431227691323).epsilon(1e-8));

  // quadratic curve with a gaussian damp: gaussian moment algebra in closed
  // form through 1/v^2 = 1/s^2 + 1/(2 beta)
  ModelBundle poly_model{WeightSpec::gaussian_damp(0.5),
                         RegressionFamily::polynomial(2), NoiseModel::degenerate()};
  const Matrix h2 = population_hessian(poly_model, vec({1.0, -0.5}),
                                       DesignDensity::gaussian(0.0, 1.0));
  REQUIRE(h2.rows() == 2);
  CHECK(h2(0, 0) == Catch::Approx(0.7071067811865476).epsilon(1e-8));
  CHECK(h2(1, 1) == Catch::Approx(1.0606601717798212).epsilon(1e-8));
  CHECK(std::abs(h2(0, 1)) < 1e-10);
  CHECK(h2(0, 1) == h2(1, 0));
}

TEST_CASE("sandwich matches the classical form without measurement error",
          "[estimators]") {
  // degenerate measurement noise turns the direct criterion into ordinary
  // least squares; the limit covariance collapses to 2 var(xi) / H
  ModelBundle model{WeightSpec::constant_one(), RegressionFamily::exponential(),
                    NoiseModel::degenerate()};
  const auto design = DesignDensity::gaussian(0.0, 1.0);
  const auto xi = XiModel::gaussian(0.5);

  const Matrix cov = sandwich_covariance(CriterionKind::tilde2, model,
                                         vec({0.3}), design, xi);
  REQUIRE(cov.rows() == 1);
  CHECK(cov(0, 0) == Catch::Approx(0.1535423182741309).epsilon(0.05));
}

TEST_CASE("windowed and direct scores share one limit covariance",
          "[estimators]") {
  // rational-times-gaussian weight against gaussian noise, with the weight
  // scale chosen so every transform ratio stays integrable
  ModelBundle model{WeightSpec::rational_gaussian(4, 0.0625),
                    RegressionFamily::cauchy(), NoiseModel::gaussian(0.25)};
  const auto design = DesignDensity::gaussian(0.0, 1.0);
  const auto xi = XiModel::gaussian(0.3);
  CovarianceOptions opt;
  opt.draws = 2000;
  opt.seed = 777;

  // identical seeds give identical draws, so any gap between the two
  // estimates is numerical integration error, not monte carlo noise
  const Matrix s1 = score_covariance(CriterionKind::tilde1, model, vec({1.0}),
                                     design, xi, opt);
  const Matrix s2 = score_covariance(CriterionKind::tilde2, model, vec({1.0}),
                                     design, xi, opt);
  REQUIRE(s1.rows() == 1);
  CHECK(s1(0, 0) > 0.0);
  CHECK(s2(0, 0) == Catch::Approx(s1(0, 0)).epsilon(1e-3));
}

TEST_CASE("score covariance guards its preconditions", "[estimators]") {
  const auto design = DesignDensity::gaussian(0.0, 1.0);
  const auto xi = XiModel::gaussian(0.3);
  CovarianceOptions small;
  small.draws = 50;

  // uncentered criteria carry no variance correction
  ModelBundle with_s2{WeightSpec::constant_one(), RegressionFamily::exponential(),
                      NoiseModel::gaussian(0.25)};
  with_s2.sigma2 = 0.1;
  CHECK_THROWS_AS(score_covariance(CriterionKind::tilde2, with_s2, vec({0.3}),
                                   design, xi, small),
                  InvariantViolation);

  // parameter-dependent weights need the centered criteria
  ModelBundle wdep{WeightSpec::cauchy_theta_match(0.0625),
                   RegressionFamily::cauchy_theta(), NoiseModel::gaussian(0.25)};
  CHECK_THROWS_AS(score_covariance(CriterionKind::tilde1, wdep, vec({1.0}),
                                   design, xi, small),
                  InvariantViolation);

  ModelBundle ok{WeightSpec::constant_one(), RegressionFamily::exponential(),
                 NoiseModel::degenerate()};
  CovarianceOptions one;
  one.draws = 1;
  CHECK_THROWS_AS(score_covariance(CriterionKind::tilde2, ok, vec({0.3}),
                                   design, xi, one),
                  InvariantViolation);

  // a two-parameter closed-form pairing: the estimate is symmetric and psd
  ModelBundle cos_model{WeightSpec::constant_one(), RegressionFamily::cosine_sum(2),
                        NoiseModel::gaussian(0.25)};
  CovarianceOptions mid;
  mid.draws = 3000;
  const Matrix s = score_covariance(CriterionKind::tilde2, cos_model,
                                    vec({1.0, 0.4}), design, xi, mid);
  REQUIRE(s.rows() == 2);
  CHECK(s(0, 1) == s(1, 0));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
  CHECK(s(0, 0) > 0.0);
  CHECK(s(1, 1) > 0.0);

  // nearly collinear design curves make the hessian numerically singular
  ModelBundle thin{WeightSpec::constant_one(), RegressionFamily::polynomial(2),
                   NoiseModel::degenerate()};
  const auto narrow = DesignDensity::uniform(1.0, 1.0 + 1e-6);
  CHECK_THROWS_AS(sandwich_covariance(CriterionKind::tilde2, thin,
                                      vec({1.0, -0.5}), narrow, xi, small),
                  SingularHessian);
}

TEST_CASE("correction triple dispatch picks closed forms for the unit weight",
          "[estimators]") {
  const auto g = NoiseModel::gaussian(0.3);
  CHECK(make_phi_triple({WeightSpec::constant_one(),
                         RegressionFamily::exponential(), g})
            .source() == PhiTriple::Source::exponential);
  CHECK(make_phi_triple({WeightSpec::constant_one(),
                         RegressionFamily::cosine_sum(2), g})
            .source() == PhiTriple::Source::cosine);
  CHECK(make_phi_triple({WeightSpec::gaussian_damp(0.5),
                         RegressionFamily::exponential(), g})
            .source() == PhiTriple::Source::fourier_ratio);
  CHECK(make_phi_triple({WeightSpec::constant_one(),
                         RegressionFamily::cauchy(), g})
            .source() == PhiTriple::Source::fourier_ratio);
}
