#pragma once

// Covariance functions of the homogeneous Gaussian white-noise field: the
// supported families, their curvature data (diffusion coefficients), a
// positive-definiteness check, and spatially correlated force increments for
// the stochastic oracle.
//
// Every family is, by construction, an even positive-definite function of the
// phase-space displacement: the cosine transform of a nonnegative measure.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wndyn/rng.hpp"

namespace wndyn {

enum class CovarianceFamily { kGaussian, kConstant, kTabulated };

/// One atom of a discrete nonnegative spectral measure, located at (p, q)
/// with the given weight.
struct SpectralAtom {
  double p = 0.0;
  double q = 0.0;
  double weight = 0.0;
};

/// Covariance function C(p, q) of the noise field.  Families:
///  - gaussian:  C = C0 exp(-p^2/2 ell_p^2 - q^2/2 ell_q^2), scales may be
///               infinite (that factor is then omitted);
///  - constant:  C = C0 everywhere;
///  - tabulated: C(p, q) = sum_a w_a cos((p q_a - q p_a)/hbar), the cosine
///               transform of the atom list.
struct CovarianceSpec {
  CovarianceFamily family = CovarianceFamily::kConstant;
  double C0 = 0.0;      ///< amplitude (gaussian, constant)
  double ell_p = 0.0;   ///< momentum length scale (gaussian; may be +inf)
  double ell_q = 0.0;   ///< position length scale (gaussian; may be +inf)
  std::vector<SpectralAtom> atoms;  ///< tabulated family
  double hbar = 1.0;

  static CovarianceSpec gaussian(double C0, double ell_p, double ell_q,
                                 double hbar = 1.0);
  static CovarianceSpec constant(double C0, double hbar = 1.0);
  static CovarianceSpec tabulated(std::vector<SpectralAtom> atoms, double hbar = 1.0);
  /// Parse a JSON array of {"p":..., "q":..., "weight":...} atoms.
  static CovarianceSpec tabulated_from_json(const std::string& json_text,
                                            double hbar = 1.0);

  /// C(0, 0).
  double c00() const;
  /// True when C does not depend on p (pure position noise).
  bool is_q_only() const;
};

/// Evaluate C at the displacement (p, q).  Even: eval_C(p,q) = eval_C(-p,-q).
double eval_C(const CovarianceSpec& spec, double p, double q);

/// Curvature moment D_{mu,nu} of the covariance at the origin, normalized so
/// that for the tabulated family
///   D_{mu,nu} = sum_a w_a (q_a/hbar)^mu (p_a/hbar)^nu / (mu! nu!),
/// e.g. D_{0,2} = -(1/2) d^2C/dq^2 (0,0) and D_{1,1} = d^2C/(dp dq) (0,0).
/// Zero whenever mu + nu is odd.
double curvature_moment(const CovarianceSpec& spec, int mu, int nu);

/// Coefficient (-d^2C/dq^2)(0,0) = 2 D_{0,2}: the variance growth rate of the
/// random force at a fixed position.
double q_curvature(const CovarianceSpec& spec);

/// 2x2 matrix of second-order diffusion coefficients in (p, q) ordering:
///   D = [[D_{0,2}, D_{1,1}/2], [D_{1,1}/2, D_{2,0}]],
/// symmetric and positive semidefinite.
struct DiffusionMatrix {
  Eigen::Matrix2d D = Eigen::Matrix2d::Zero();

  double d02() const { return D(0, 0); }
  double d11() const { return 2.0 * D(0, 1); }
  double d20() const { return D(1, 1); }
};

/// Build the diffusion matrix from the curvature of C at the origin.
DiffusionMatrix diffusion_matrix(const CovarianceSpec& spec);

/// Result of a positive-definiteness check.
struct PositivityReport {
  double min_component = 0.0;  ///< smallest spectral component found
  double threshold = 0.0;      ///< components below -threshold fail
  std::size_t samples = 0;     ///< grid points (or atoms) inspected
  bool pass = false;
};

/// Check that C is the cosine transform of a nonnegative measure by taking
/// the discrete Fourier transform of C sampled on a large symmetric grid and
/// requiring every component to be >= -1e-8 * C(0,0).  The tabulated family
/// is validated directly from its atom weights (its sampled transform would
/// only add truncation leakage around the exact atoms).  Throws
/// NotPositiveType on failure, otherwise returns the report.
PositivityReport validate_positive_type(const CovarianceSpec& spec, int samples);

/// Same check for a raw table of C sampled at q_j = (j - N/2) * step,
/// j = 0..N-1 (one-dimensional, position dependence only).  This is the entry
/// point for hand-built tables that no constructor-validated family can
/// represent.  Throws NotPositiveType on failure.
PositivityReport validate_positive_type(const std::vector<double>& c_values,
                                        double step);

/// Jointly Gaussian increments of the random force -dV/dq accumulated over a
/// time step dt, evaluated at the given positions.  The cross-covariance of
/// the returned increments is (-C'')(q_i - q_j) * dt.  Realized by a finite
/// cosine/sine mode expansion of the homogeneous field with independent
/// standard normal coefficients, so increments at different positions are
/// correctly correlated.  Requires a q-only spec (throws
/// std::invalid_argument otherwise); dt >= 0.
std::vector<double> sample_field_increment(const CovarianceSpec& spec,
                                           CounterRng& rng,
                                           const std::vector<double>& positions,
                                           double dt);

}  // namespace wndyn
