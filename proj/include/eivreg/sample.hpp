#pragma once

#include <vector>

#include <Eigen/Dense>

#include "eivreg/design.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/noise.hpp"
#include "eivreg/regression.hpp"
#include "eivreg/rng.hpp"

namespace eivreg {

//! One simulated data set.  Estimation sees only (y, z); the latent columns
//! are kept for oracle checks and diagnostics.
struct Sample {
  std::vector<double> y;
  std::vector<double> z;
  std::vector<double> x;    // latent regressor
  std::vector<double> xi;   // latent regression error
  std::vector<double> eps;  // latent measurement error

  std::size_t size() const { return y.size(); }
};

//! Draws n observations of (Y, Z) with Y = f_theta(X) + xi and Z = X + eps.
//! Per observation the draw order is fixed (X, then xi, then eps) so results
//! are reproducible for a given generator state.
inline Sample generate_sample(const DesignDensity& design,
                              const RegressionFamily& family,
                              const Eigen::VectorXd& theta, const XiModel& xi,
                              const NoiseModel& noise, std::size_t n, Rng& rng) {
  family.check_dimension(theta);
  Sample s;
  s.y.resize(n);
  s.z.resize(n);
  s.x.resize(n);
  s.xi.resize(n);
  s.eps.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.x[i] = design.sample(rng);
    s.xi[i] = xi.sample(rng);
    s.eps[i] = noise.sample(rng);
    s.y[i] = family.value(theta, s.x[i]) + s.xi[i];
    s.z[i] = s.x[i] + s.eps[i];
  }
  return s;
}

inline Sample generate_sample(const DesignDensity& design,
                              const RegressionFamily& family,
                              const Eigen::VectorXd& theta, const XiModel& xi,
                              const NoiseModel& noise, std::size_t n,
                              std::uint64_t seed) {
  Rng rng(seed);
  return generate_sample(design, family, theta, xi, noise, n, rng);
}

}  // namespace eivreg
