#pragma once

#include <stdexcept>
#include <string>

namespace eivreg {

//! Base class for all library failures.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

//! The noise characteristic function dropped below the representable floor
//! inside the integration band, so deconvolution weights 1/p_eps*(u) blow up.
struct NonvanishingViolation : Error {
  using Error::Error;
};

//! Adaptive panel refinement hit its depth cap without the requested
//! agreement, or an imaginary residue exceeded its tolerance.
struct QuadratureFailure : Error {
  using Error::Error;
};

//! A Fourier transform was requested outside the tabulated range, or for a
//! function with no registered transform.
struct MissingFourierTransform : Error {
  using Error::Error;
};

//! A function that must be integrable (weighted target, ratio target) is not.
struct NotIntegrable : Error {
  using Error::Error;
};

//! psi*/p_eps* fails the integrability probe, so ratio-based constructions
//! (closed-form criterion from transform ratios, score integrals) refuse.
struct RatioNotIntegrable : Error {
  using Error::Error;
};

//! A moment generating function was evaluated outside its domain.
struct MomentDiverges : Error {
  using Error::Error;
};

//! A registered object violates one of its structural guarantees
//! (kernel normalization, smoothness envelope, weight positivity, ...).
struct InvariantViolation : Error {
  using Error::Error;
};

//! Parameter vector length does not match the family dimension.
struct DimensionMismatch : Error {
  using Error::Error;
};

//! The criterion Hessian is numerically singular at the requested point.
struct SingularHessian : Error {
  using Error::Error;
};

//! A smoothness tuple falls outside every known rate regime.
struct InvalidRegime : Error {
  using Error::Error;
};

//! A spectral tail integral does not converge (decay exponent too small).
struct TailNotIntegrable : Error {
  using Error::Error;
};

//! Configuration file problems: unknown keys, unparsable values.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace eivreg
