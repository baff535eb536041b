#pragma once

#include <stdexcept>
#include <string>

namespace wndyn {

/// Covariance sample grid has a spectral component below the allowed floor,
/// i.e. the function cannot be the symplectic Fourier transform of a
/// nonnegative measure.
struct NotPositiveType : std::runtime_error {
  explicit NotPositiveType(const std::string& what) : std::runtime_error(what) {}
};

/// A grid evolution carried more than the allowed mass across the lattice
/// boundary; the result would be silently truncated.
struct SupportEscape : std::runtime_error {
  explicit SupportEscape(const std::string& what) : std::runtime_error(what) {}
};

/// A spectral density failed the admissibility checks (evenness, strict
/// positivity at zero, decay of nu^2 J), or an operation requires a property
/// the given family cannot provide.
struct AssumptionViolation : std::runtime_error {
  explicit AssumptionViolation(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent experiment configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wndyn
