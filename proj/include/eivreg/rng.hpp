#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace eivreg {

//! Deterministic RNG wrapper.  Distribution transforms are implemented here
//! (not std::normal_distribution etc.) so that a given seed yields the same
//! stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  //! splitmix64 step; used to derive independent per-replicate seeds.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  //! Counter-based seed for replicate r at sample size n under a study base
  //! seed; replicates can run in any order or thread without coordination.
  static std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t n,
                                      std::uint64_t r) {
    return mix(mix(mix(base) ^ n) ^ (r * 0x9E3779B97F4A7C15ull + 1));
  }

  //! Uniform on (0, 1).
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  //! Standard normal via Box-Muller (no cached spare, fixed draw order).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  //! Symmetric Laplace with unit scale parameter.
  double laplace() {
    const double u = uniform();
    return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace eivreg
