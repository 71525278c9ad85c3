#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "eivreg/deconvolution.hpp"
#include "eivreg/fourier.hpp"
#include "eivreg/kernel.hpp"
#include "eivreg/noise.hpp"
#include "eivreg/quadrature.hpp"

using namespace eivreg;

TEST_CASE("gauss rule integrates high-degree polynomials exactly", "[spectral][quadrature]") {
  // order n is exact through degree 2n-1
  const auto f = [](double x) { return std::pow(x, 30); };
  const double got = composite_pass(f, -1.0, 1.0, 1, 16);
  REQUIRE(got == Catch::Approx(2.0 / 31.0).epsilon(1e-13));
}

TEST_CASE("adaptive integrate handles smooth and oscillatory integrands", "[spectral][quadrature]") {
  const double s = integrate([](double x) { return std::sin(x); }, 0.0, M_PI);
  REQUIRE(s == Catch::Approx(2.0).epsilon(1e-12));

  // exp(-iuz) factors: the oscillation guard must resolve them; reference is
  // the Gaussian pair integral exp(-a u^2 - iuz) du = sqrt(pi/a) exp(-z^2/4a)
  const double a = 0.5;
  const auto gauss = [&](double z) {
    return integrate(
        [&](double u) { return std::exp(Complex(0.0, -u * z)) * std::exp(-a * u * u); },
        -14.0, 14.0, {}, z);
  };
  const Complex mid = gauss(3.0);
  REQUIRE(mid.real() ==
          Catch::Approx(std::sqrt(M_PI / a) * std::exp(-9.0 / (4.0 * a))).epsilon(1e-10));
  REQUIRE(std::abs(mid.imag()) < 1e-12);
  const Complex fast = gauss(40.0);  // true value underflows; cancellation must too
  REQUIRE(std::abs(fast) < 1e-12);
}

TEST_CASE("integrate_real rejects a genuine imaginary residue", "[spectral][quadrature]") {
  REQUIRE_THROWS_AS(
      integrate_real([](double) { return Complex(0.0, 1.0); }, 0.0, 1.0),
      QuadratureFailure);
}

TEST_CASE("integrate_to_infinity: exponential tail and divergence detection", "[spectral][quadrature]") {
  const double v = integrate_to_infinity([](double u) { return std::exp(-u); }, 0.0);
  REQUIRE(v == Catch::Approx(1.0).epsilon(1e-9));
  REQUIRE_THROWS_AS(
      integrate_to_infinity([](double u) { return 1.0 / (1.0 + u); }, 0.0),
      TailNotIntegrable);
}

TEST_CASE("tilted gaussian moments match direct quadrature", "[spectral][fourier]") {
  const double beta = 0.7;
  for (int m : {0, 1, 2, 3, 5, 8}) {
    for (Complex zeta : {Complex(0.3, 1.1), Complex(-0.5, 0.0), Complex(0.0, 2.0)}) {
      const Complex got = detail::tilted_gauss_moment(m, zeta, beta);
      const Complex ref = integrate(
          [&](double x) {
            return std::pow(x, m) * std::exp(zeta * x) * std::exp(-x * x / (4.0 * beta));
          },
          -40.0, 40.0);
      REQUIRE(std::abs(got - ref) < 1e-10 * (1.0 + std::abs(ref)));
    }
  }
}

TEST_CASE("gauss-exp-poly transform matches the closed Gaussian pair", "[spectral][fourier]") {
  // psi(x) = exp(-x^2/(4 beta))  =>  psi*(u) = 2 sqrt(pi beta) exp(-beta u^2)
  const double beta = 0.5;
  const GaussExpPoly psi(beta, ExpPoly::constant(1.0));
  for (double u : {0.0, 0.7, 2.3, -4.1}) {
    const Complex got = psi.fourier(u);
    const double ref = 2.0 * std::sqrt(M_PI * beta) * std::exp(-beta * u * u);
    REQUIRE(got.real() == Catch::Approx(ref).epsilon(1e-12));
    REQUIRE(std::abs(got.imag()) < 1e-14);
  }
}

TEST_CASE("exp-poly algebra: products and powers evaluate consistently", "[spectral][fourier]") {
  // (1 + e^{0.3 x})^3 * x^2 at a few points
  const ExpPoly d = ExpPoly::constant(1.0) + ExpPoly::monomial(1.0, 0, Complex(0.3));
  const ExpPoly q = d.pow(3).times_x().times_x();
  for (double x : {-1.7, 0.0, 0.9, 2.4}) {
    const double direct = std::pow(1.0 + std::exp(0.3 * x), 3) * x * x;
    REQUIRE(q.evaluate(x).real() == Catch::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("numeric transform agrees with the analytic one", "[spectral][fourier]") {
  const double beta = 0.6;
  const GaussExpPoly psi(beta, ExpPoly::monomial(1.0, 2, Complex(0.0)) +
                                   ExpPoly::constant(0.5));
  const auto f = [&](double x) { return psi.evaluate(x); };
  const auto tab = numeric_fourier_transform(f, -12.0, 12.0, 8.0);
  double scale = 0.0;
  for (double u = -8.0; u <= 8.0; u += 0.5)
    scale = std::max(scale, std::abs(psi.fourier(u)));
  for (double u = -8.0; u <= 8.0; u += 0.37) {
    const Complex got = tab(u);
    const Complex ref = psi.fourier(u);
    REQUIRE(std::abs(got - ref) < 2e-6 * scale);
  }
  REQUIRE_THROWS_AS(tab(9.0), MissingFourierTransform);
}

TEST_CASE("effective support finds the damped window", "[spectral][fourier]") {
  const auto f = [](double x) { return std::exp(-x * x / 2.0); };
  const auto [lo, hi] = effective_support(f, 1e-10);
  REQUIRE(lo < -6.0);
  REQUIRE(hi > 6.0);
  REQUIRE(hi < 12.0);
}

TEST_CASE("deconvolving kernel closed forms", "[spectral][deconv]") {
  const auto sinc = KernelSpec::sinc();

  // no measurement error: K_{n,Cn}(x) = sin(Cn x)/(pi x); value 1/pi at 0, Cn=1
  const auto none = NoiseModel::degenerate();
  REQUIRE(deconv_kernel_value(sinc, none, 1.0, 0.0) ==
          Catch::Approx(1.0 / M_PI).epsilon(1e-10));
  const double x = 0.7, cn = 3.0;
  REQUIRE(deconv_kernel_value(sinc, none, cn, x) ==
          Catch::Approx(std::sin(cn * x) / (M_PI * x)).epsilon(1e-10));

  // symmetric Laplace, sigma = 1, Cn = 1, x = 0:
  //   (2 pi)^-1 integral_{-1}^{1} (1 + t^2) dt = 4 / (3 pi)
  const auto lap = NoiseModel::laplace_symmetric(1.0);
  REQUIRE(deconv_kernel_value(sinc, lap, 1.0, 0.0) ==
          Catch::Approx(4.0 / (3.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("deconvolving kernel is even for symmetric noise", "[spectral][deconv]") {
  const auto sinc = KernelSpec::sinc();
  const auto lap = NoiseModel::laplace_symmetric(0.5);
  for (double x : {0.3, 1.1, 2.9}) {
    REQUIRE(deconv_kernel_value(sinc, lap, 2.0, x) ==
            Catch::Approx(deconv_kernel_value(sinc, lap, 2.0, -x)).margin(1e-10));
  }
}

TEST_CASE("kernel mass equals one across noise models and bandwidths", "[spectral][deconv]") {
  const auto kernels = {KernelSpec::sinc(), KernelSpec::flat_top(2.0)};
  const auto noises = {NoiseModel::gaussian(0.5), NoiseModel::gaussian(1.0),
                       NoiseModel::laplace_symmetric(0.5),
                       NoiseModel::laplace_symmetric(1.0), NoiseModel::degenerate()};
  for (const auto& k : kernels)
    for (const auto& nm : noises)
      for (double cn : {1.0, 2.0, 5.0, 10.0})
        REQUIRE(deconv_kernel_mass(k, nm, cn) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("kernel mass cross-check: damped x-space quadrature", "[spectral][deconv]") {
  // integral K_{n,Cn}(x) exp(-delta x^2) dx -> mass as delta -> 0; the window
  // bias is O(delta), so a small delta confirms the principal value ~ 1.
  const auto sinc = KernelSpec::sinc();
  const auto lap = NoiseModel::laplace_symmetric(1.0);
  const double cn = 3.0, delta = 2e-3;
  QuadratureSpec outer;
  outer.rel_tol = 1e-6;
  QuadratureSpec inner;
  inner.rel_tol = 1e-8;
  const double got = integrate(
      [&](double x) {
        return deconv_kernel_value(sinc, lap, cn, x, inner) * std::exp(-delta * x * x);
      },
      -80.0, 80.0, outer, cn);
  REQUIRE(got == Catch::Approx(1.0).margin(5e-3));
}

TEST_CASE("vanishing characteristic function is refused", "[spectral][deconv]") {
  // Gaussian cf underflows near |t| ~ 53 for sigma = 1; a bandwidth that wide
  // must be rejected rather than silently overflowing.
  const auto g = NoiseModel::gaussian(1.0);
  REQUIRE_THROWS_AS(deconv_kernel_value(KernelSpec::sinc(), g, 60.0, 0.0),
                    NonvanishingViolation);
}

TEST_CASE("kernel window admissibility is enforced", "[spectral][deconv]") {
  REQUIRE_NOTHROW(KernelSpec::sinc().validate());
  REQUIRE_NOTHROW(KernelSpec::flat_top(2.0).validate());
  REQUIRE_THROWS_AS(
      KernelSpec::custom([](double t) { return std::abs(t) <= 1.0 ? 0.9 : 0.0; }, 1.0),
      InvariantViolation);
  // windows may do anything within |1 - K*| <= 1 beyond |t| = 1 ...
  REQUIRE_NOTHROW(
      KernelSpec::custom([](double t) { return std::abs(t) <= 2.0 ? 1.0 : 0.0; }, 2.0));
  // ... but an undershoot below 0 breaks the bound
  REQUIRE_THROWS_AS(
      KernelSpec::custom(
          [](double t) {
            const double s = std::abs(t);
            return s <= 1.0 ? 1.0 : (s <= 2.0 ? -0.5 : 0.0);
          },
          2.0),
      InvariantViolation);
}

TEST_CASE("smoothed functional equals x-space double quadrature", "[spectral][deconv]") {
  // psi = (0.5 + x^2) exp(-x^2/2.4), Laplace noise, sinc window
  const double beta = 0.6;
  const GaussExpPoly psi(beta, ExpPoly::monomial(1.0, 2, Complex(0.0)) +
                                   ExpPoly::constant(0.5));
  const auto kernel = KernelSpec::sinc();
  const auto noise = NoiseModel::laplace_symmetric(0.5);
  const double cn = 2.5;
  const auto psi_ft = [&](double u) { return psi.fourier(u); };

  QuadratureSpec outer;
  outer.rel_tol = 1e-9;
  QuadratureSpec inner;
  inner.rel_tol = 1e-10;
  for (double z : {-1.3, 0.0, 0.8, 2.1}) {
    const double fast = smoothed_functional(psi_ft, kernel, noise, cn, z);
    const double slow = integrate(
        [&](double x) {
          return psi.evaluate(x) * deconv_kernel_value(kernel, noise, cn, z - x, inner);
        },
        -11.0, 11.0, outer, cn);
    REQUIRE(fast == Catch::Approx(slow).epsilon(2e-7));
  }
}

TEST_CASE("frequency grid reproduces adaptive integrals", "[spectral][deconv]") {
  const auto g = frequency_grid(-3.0, 3.0, 10.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < g.node.size(); ++i)
    acc += std::cos(10.0 * g.node[i]) * g.weight[i];
  const double ref = 2.0 * std::sin(30.0) / 10.0;
  REQUIRE(acc == Catch::Approx(ref).margin(1e-12));
}
