#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "eivreg/design.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/kernel.hpp"
#include "eivreg/noise.hpp"
#include "eivreg/regression.hpp"
#include "eivreg/weights.hpp"

namespace eivreg {

//! Flat numeric parameters attached to a catalog key.
using Params = std::map<std::string, double>;

namespace detail {

//! Consumes parameters one by one so that leftover (misspelled) keys can be
//! reported instead of silently ignored.
class ParamReader {
 public:
  ParamReader(Params p, std::string context)
      : p_(std::move(p)), ctx_(std::move(context)) {}

  double get(const std::string& key, double fallback) {
    auto it = p_.find(key);
    if (it == p_.end()) return fallback;
    const double v = it->second;
    p_.erase(it);
    return v;
  }

  double require(const std::string& key) {
    auto it = p_.find(key);
    if (it == p_.end())
      throw ConfigError(ctx_ + ": missing required parameter '" + key + "'");
    const double v = it->second;
    p_.erase(it);
    return v;
  }

  bool has(const std::string& key) const { return p_.count(key) != 0; }

  void done() {
    if (p_.empty()) return;
    std::string keys;
    for (const auto& [k, v] : p_) {
      (void)v;
      if (!keys.empty()) keys += ", ";
      keys += k;
    }
    throw ConfigError(ctx_ + ": unknown parameter(s): " + keys);
  }

 private:
  Params p_;
  std::string ctx_;
};

inline std::string join_keys(const std::vector<std::string>& keys) {
  std::string s;
  for (const auto& k : keys) {
    if (!s.empty()) s += ", ";
    s += k;
  }
  return s;
}

}  // namespace detail

inline std::vector<std::string> known_families() {
  return {"polynomial", "exponential", "cosineSum",  "cauchy",
          "laplaceTent", "indicator",  "polygonal",  "logistic3",
          "logistic4",   "cauchyTheta"};
}

inline std::vector<std::string> known_noises() {
  return {"gaussian", "laplaceSymmetric", "degenerate"};
}

inline std::vector<std::string> known_designs() {
  return {"gaussian", "uniform", "gaussianMixture"};
}

inline std::vector<std::string> known_xi_models() {
  return {"gaussian", "laplaceSymmetric", "zero"};
}

inline std::vector<std::string> known_weights() {
  return {"constantOne",    "gaussianDamp",   "rationalGaussian",
          "bumpPsi",        "powerSmoother",  "sumOfBumps",
          "logistic3Match", "logistic4Match", "cauchyThetaMatch"};
}

inline std::vector<std::string> known_kernels() { return {"sinc", "flatTop"}; }

inline RegressionFamily make_family(const std::string& key,
                                    const Params& params = {}) {
  detail::ParamReader p(params, "family '" + key + "'");
  if (key == "polynomial") {
    const int deg = static_cast<int>(p.get("degree", 2));
    p.done();
    return RegressionFamily::polynomial(deg);
  }
  if (key == "exponential") {
    p.done();
    return RegressionFamily::exponential();
  }
  if (key == "cosineSum") {
    const int terms = static_cast<int>(p.get("terms", 2));
    p.done();
    return RegressionFamily::cosine_sum(terms);
  }
  if (key == "cauchy") {
    p.done();
    return RegressionFamily::cauchy();
  }
  if (key == "laplaceTent") {
    p.done();
    return RegressionFamily::laplace_tent();
  }
  if (key == "indicator") {
    p.done();
    return RegressionFamily::indicator();
  }
  if (key == "polygonal") {
    const double a = p.get("a", -1.0);
    const double b = p.get("b", 1.0);
    p.done();
    return RegressionFamily::polygonal(a, b);
  }
  if (key == "logistic3") {
    p.done();
    return RegressionFamily::logistic3();
  }
  if (key == "logistic4") {
    p.done();
    return RegressionFamily::logistic4();
  }
  if (key == "cauchyTheta") {
    p.done();
    return RegressionFamily::cauchy_theta();
  }
  throw ConfigError("unknown family '" + key +
                    "'; known: " + detail::join_keys(known_families()));
}

inline NoiseModel make_noise(const std::string& key, const Params& params = {}) {
  detail::ParamReader p(params, "noise '" + key + "'");
  if (key == "gaussian") {
    const double sigma = p.get("sigma", 1.0);
    p.done();
    return NoiseModel::gaussian(sigma);
  }
  if (key == "laplaceSymmetric") {
    const double sigma = p.get("sigma", 1.0);
    p.done();
    return NoiseModel::laplace_symmetric(sigma);
  }
  if (key == "degenerate") {
    p.done();
    return NoiseModel::degenerate();
  }
  throw ConfigError("unknown noise '" + key +
                    "'; known: " + detail::join_keys(known_noises()));
}

inline DesignDensity make_design(const std::string& key,
                                 const Params& params = {}) {
  detail::ParamReader p(params, "design '" + key + "'");
  if (key == "gaussian") {
    const double mean = p.get("mean", 0.0);
    const double sigma = p.get("sigma", 1.0);
    p.done();
    return DesignDensity::gaussian(mean, sigma);
  }
  if (key == "uniform") {
    const double a = p.get("a", -1.0);
    const double b = p.get("b", 1.0);
    p.done();
    return DesignDensity::uniform(a, b);
  }
  if (key == "gaussianMixture") {
    const double w1 = p.get("w1", 0.5);
    const double m1 = p.get("m1", -1.0);
    const double s1 = p.get("s1", 0.5);
    const double m2 = p.get("m2", 1.0);
    const double s2 = p.get("s2", 0.5);
    p.done();
    return DesignDensity::gaussian_mixture(w1, m1, s1, m2, s2);
  }
  throw ConfigError("unknown design '" + key +
                    "'; known: " + detail::join_keys(known_designs()));
}

inline XiModel make_xi(const std::string& key, const Params& params = {}) {
  detail::ParamReader p(params, "xi '" + key + "'");
  if (key == "gaussian") {
    const double sigma = p.get("sigma", 1.0);
    p.done();
    return XiModel::gaussian(sigma);
  }
  if (key == "laplaceSymmetric") {
    const double sigma = p.get("sigma", 1.0);
    p.done();
    return XiModel::laplace_symmetric(sigma);
  }
  if (key == "zero") {
    p.done();
    return XiModel::zero();
  }
  throw ConfigError("unknown xi model '" + key +
                    "'; known: " + detail::join_keys(known_xi_models()));
}

inline WeightSpec make_weight(const std::string& key, const Params& params = {}) {
  detail::ParamReader p(params, "weight '" + key + "'");
  if (key == "constantOne") {
    p.done();
    return WeightSpec::constant_one();
  }
  if (key == "gaussianDamp") {
    const double beta = p.get("beta", 1.0);
    p.done();
    return WeightSpec::gaussian_damp(beta);
  }
  if (key == "rationalGaussian") {
    const int m = static_cast<int>(p.get("m", 2));
    const double beta = p.get("beta", 1.0);
    p.done();
    return WeightSpec::rational_gaussian(m, beta);
  }
  if (key == "bumpPsi") {
    const double a = p.get("a", -1.0);
    const double b = p.get("b", 1.0);
    const double R = p.get("R", 1.0);
    p.done();
    return WeightSpec::bump(a, b, R);
  }
  if (key == "powerSmoother") {
    const double R = p.get("R", 2.0);
    p.done();
    return WeightSpec::power_smoother(R);
  }
  if (key == "sumOfBumps") {
    const int count = static_cast<int>(p.require("count"));
    if (count < 1) throw ConfigError("sumOfBumps: count must be positive");
    std::vector<BumpParams> bumps;
    for (int i = 0; i < count; ++i) {
      const std::string s = std::to_string(i);
      BumpParams bp;
      bp.a = p.require("a" + s);
      bp.b = p.require("b" + s);
      bp.R = p.get("R" + s, 4.0);
      bumps.push_back(bp);
    }
    p.done();
    return WeightSpec::sum_of_bumps(std::move(bumps));
  }
  if (key == "logistic3Match") {
    const double beta = p.get("beta", 1.0);
    p.done();
    return WeightSpec::logistic3_match(beta);
  }
  if (key == "logistic4Match") {
    const double beta = p.get("beta", 1.0);
    p.done();
    return WeightSpec::logistic4_match(beta);
  }
  if (key == "cauchyThetaMatch") {
    const double beta = p.get("beta", 1.0);
    p.done();
    return WeightSpec::cauchy_theta_match(beta);
  }
  throw ConfigError("unknown weight '" + key +
                    "'; known: " + detail::join_keys(known_weights()));
}

inline KernelSpec make_kernel(const std::string& key, const Params& params = {}) {
  detail::ParamReader p(params, "kernel '" + key + "'");
  if (key == "sinc") {
    p.done();
    return KernelSpec::sinc();
  }
  if (key == "flatTop") {
    const double s = p.get("s", 2.0);
    p.done();
    return KernelSpec::flat_top(s);
  }
  throw ConfigError("unknown kernel '" + key +
                    "'; known: " + detail::join_keys(known_kernels()));
}

//! Weight scale that keeps the weighted-target transforms strictly lighter
//! than the noise transform tail.  For Gaussian noise this doubles the noise
//! exponent so transform ratios stay integrable; for polynomially decaying
//! characteristic functions any fixed Gaussian scale works.
inline double default_weight_beta(const NoiseModel& noise) {
  const NoiseSmoothness s = noise.smoothness();
  return s.rho == 2.0 ? 2.0 * s.beta : 1.0;
}

//! Default weight pairing for a regression family: a scale the target algebra
//! handles in closed form where one exists, and compactly supported smoothers
//! that vanish at the family's kinks otherwise.
inline WeightSpec recommended_weight(const RegressionFamily& family,
                                     const NoiseModel& noise) {
  const double beta = default_weight_beta(noise);
  const std::string& name = family.name();
  if (name == "polynomial" || name == "exponential" || name == "cosineSum")
    return WeightSpec::gaussian_damp(beta);
  if (name == "cauchy") return WeightSpec::rational_gaussian(2, beta);
  if (name == "laplaceTent")
    return WeightSpec::sum_of_bumps({{-10.0, 0.0, 4.0}, {0.0, 10.0, 4.0}});
  if (name == "indicator") return WeightSpec::bump(-1.0, 1.0, 1.0);
  if (name == "polygonal") {
    const auto kinks = family.x_kinks();
    const double a = kinks.at(0), b = kinks.at(1);
    return WeightSpec::sum_of_bumps(
        {{-10.0, a, 4.0}, {a, b, 4.0}, {b, 10.0, 4.0}});
  }
  if (name == "logistic3") return WeightSpec::logistic3_match(beta);
  if (name == "logistic4") return WeightSpec::logistic4_match(beta);
  if (name == "cauchyTheta") return WeightSpec::cauchy_theta_match(beta);
  throw ConfigError("no recommended weight for family '" + name + "'");
}

}  // namespace eivreg
