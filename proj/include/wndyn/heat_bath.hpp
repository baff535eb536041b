#pragma once

// Heat-bath machinery: finite bath matrices and their exact moment
// contributions, spectral densities, damping kernels, causal Green functions
// of the damped oscillator, thermal fluctuation covariances, reduced
// second moments, and long-time limits.

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wndyn {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Spectral densities
// ---------------------------------------------------------------------------

enum class SpectralFamily { kDrude, kGaussian, kTabulated };

// Even, strictly positive coupling-strength density J(nu) with an algebraic
// decay bound: nu^2 J(nu) stays bounded with limit L (possibly 0).
struct SpectralDensity {
  SpectralFamily family = SpectralFamily::kDrude;
  double J0 = 0.0;      // amplitude (drude/gaussian)
  double omega0 = 0.0;  // frequency scale (drude/gaussian)
  std::vector<double> nu_tab;  // ascending, nu >= 0
  std::vector<double> J_tab;

  static SpectralDensity drude(double J0, double omega0);
  static SpectralDensity gaussian(double J0, double omega0);
  static SpectralDensity tabulated(std::vector<double> nu, std::vector<double> J);
  // JSON object {"nu": [...], "J": [...]}; symmetric samples are folded.
  static SpectralDensity tabulated_from_json(const std::string& text);

  // J(|nu|); zero beyond the tabulated range.
  double operator()(double nu) const;

  // limit of nu^2 J(nu) (0 for the gaussian family).
  double limit_L() const;

  // time-domain friction kernel at t = 0:  gamma(0) = 2 * int_0^inf J.
  double kernel0() const;

  // frequency beyond which nu^2 J(nu) is within 1% of its limit.
  double nu_cutoff() const;

  // throws AssumptionViolation when J(0) <= 0, positivity fails on the
  // sampled range, or the tail does not level off like 1/nu^2 (Ohmic-type
  // tails are rejected).
  void check_admissible() const;
};

// Damping kernel transform.  On the real axis (PV prescription)
//   gamma_hat(nu) = pi*J(nu) + i * PV int J(nu')/(nu - nu') dnu';
// in the upper half plane  gamma_hat(z) = i * int J(nu')/(z - nu') dnu'.
// Closed form for the drude family; Dawson-function closed form for the
// gaussian family on the real axis; adaptive quadrature otherwise.
cplx gamma_hat(const SpectralDensity& J, cplx z);

// ---------------------------------------------------------------------------
// Finite baths
// ---------------------------------------------------------------------------

struct BathSpec {
  int n = 0;                      // number of bath oscillators
  std::vector<double> masses;     // m_j > 0, size n
  std::vector<double> frequencies;  // 0 < w_1 < ... < w_n
  double m = 1.0;                 // system mass
  double omega = 0.0;             // system frequency >= 0

  void validate() const;  // throws std::invalid_argument
};

struct BathMatrices {
  Eigen::VectorXd M_diag;   // diag(m, m_1, ..., m_n)
  Eigen::MatrixXd Omega2;   // symmetric (n+1) x (n+1), positive semidefinite
};

BathMatrices build_bath(const BathSpec& spec);

// Bins [0, cutoff] into n intervals, places one oscillator at each midpoint
// with m_j w_j^2 = 2 * (bin integral of J).
BathSpec discretize_bath(const SpectralDensity& J, int n, double cutoff,
                         double system_mass, double system_omega);

// Eigen-decomposed finite bath: mode frequencies and the squared first-row
// weights that generate the (0,0) entries of the propagator matrix functions.
class FiniteBath {
 public:
  explicit FiniteBath(const BathSpec& spec);

  const BathSpec& spec() const { return spec_; }
  const BathMatrices& matrices() const { return mat_; }
  const Eigen::VectorXd& mode_frequencies() const { return freq_; }
  const Eigen::VectorXd& mode_weights() const { return weight_; }

  // (cos(Omega s))_{00}
  double cos00(double s) const;
  // (sin(Omega s)/Omega)_{00}; exactly 0 for s < 0 (causal response)
  double gn(double s) const;

 private:
  BathSpec spec_;
  BathMatrices mat_;
  Eigen::VectorXd freq_;    // sqrt of Omega^2 eigenvalues, >= 0
  Eigen::VectorXd weight_;  // squared first components of eigenvectors
};

struct FiniteNMoments {
  double p2_added = 0.0;  // curv * int_0^t cos00(s)^2 ds
  double q2_added = 0.0;  // (curv/m^2) * int_0^t gn(s)^2 ds
};

// curv = (-d^2/dq^2 C)(0), the white-noise force strength.
FiniteNMoments finite_n_moments(const FiniteBath& bath, double curv, double t);
FiniteNMoments finite_n_moments(const BathSpec& spec, double curv, double t);

// |eigendecomposition route - secular-equation partial fraction route| for
// (sin(Omega s)/Omega)_{00}.
double gn_identity_check(const FiniteBath& bath, double s);

// ---------------------------------------------------------------------------
// Green function of the damped oscillator
// ---------------------------------------------------------------------------

// Causal response G of
//   m qdd(t) + int_0^t gamma(t-s) qd(s) ds + m w^2 q(t) = F(t),
// normalized so G(0+) = 0, Gdot(0+) = 1, Gddot(0+) = 0, with
//   Ghat(z) = 1/(w^2 - z^2 - i z gamma_hat(z)/m).
class GreenFunction {
 public:
  GreenFunction(const SpectralDensity& J, double m, double omega, double t_max,
                int nt, int nu_panels);

  cplx Ghat(double nu) const;

  // linear interpolation on the stored grid; exact 0 for t < 0;
  // throws std::out_of_range beyond the stored horizon.
  double G(double t) const;
  double Gdot(double t) const;
  double Gddot(double t) const;

  const std::vector<double>& t_grid() const { return t_; }
  const std::vector<double>& G_samples() const { return G_; }
  const std::vector<double>& Gdot_samples() const { return Gdot_; }
  const std::vector<double>& Gddot_samples() const { return Gddot_; }

  double eta() const { return eta_; }            // decay-rate estimate
  double plateau() const { return plateau_; }    // m/(pi J(0)) when omega == 0
  bool has_plateau() const { return omega_ == 0.0; }

  double m() const { return m_; }
  double omega() const { return omega_; }
  double nu_max() const { return nu_max_; }
  const SpectralDensity& J() const { return J_; }

 private:
  double interp(const std::vector<double>& y, double t) const;

  SpectralDensity J_;
  double m_, omega_;
  double L_, kernel0_, a_, b_;  // tail constants
  double nu_max_;
  double plateau_ = 0.0;
  double eta_ = 0.0;
  std::vector<double> t_, G_, Gdot_, Gddot_;
};

GreenFunction green(const SpectralDensity& J, double m, double omega,
                    double t_max = 50.0, int nt = 4096, int nu_panels = 8192);

// ---------------------------------------------------------------------------
// Thermal fluctuation covariance of the bath force
// ---------------------------------------------------------------------------

// Phi_beta(t) = hbar int_0^inf J(nu) nu coth(beta hbar nu / 2) cos(nu t) dnu.
// Even in t.  When L != 0 it diverges logarithmically at t = 0; the first
// stored sample is then the cell average (2/dt) int_0^{dt/2} Phi.
struct BathCorrelation {
  std::vector<double> t;
  std::vector<double> values;
  double beta = 0.0;
  double hbar = 0.0;
  double L = 0.0;

  double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
  // midpoint-cell estimate of int_{-inf}^{inf} Phi dt (= 2 pi J(0)/beta)
  double integral() const;
};

BathCorrelation phi_beta(const SpectralDensity& J, double beta, double hbar,
                         double t_max, int nt);

// Finite-n pre-limit: sum_j m_j w_j^2 cos(w_j t) / beta_eff(hbar w_j).
double phi_beta_finite_n(const BathSpec& spec, double beta, double hbar, double t);

// (2/E) tanh(beta E / 2), continuously extended to beta at E = 0.
double beta_eff(double E, double beta);

// ---------------------------------------------------------------------------
// Thermal equilibrium values
// ---------------------------------------------------------------------------

enum class ThermalMethod { kSpectralIntegral, kPvIntegral, kMatsubara };

struct ThermalValues {
  double p2 = 0.0;
  double q2 = 0.0;  // NaN when omega == 0 (not requested)
};

// Three independent representations of the equilibrium second moments.
// include_q2 must be false when omega == 0 (else std::invalid_argument).
ThermalValues thermal_values(const SpectralDensity& J, double m, double omega,
                             double beta, double hbar, ThermalMethod method,
                             bool include_q2 = true);

// ---------------------------------------------------------------------------
// Reduced second moments of the open system
// ---------------------------------------------------------------------------

struct InitialSecondMoments {
  double p_mean = 0.0;
  double q_mean = 0.0;
  double p2 = 0.0;  // raw moments
  double pq = 0.0;
  double q2 = 0.0;
};

struct ReducedMoments {
  std::vector<double> times;
  std::vector<double> p_mean, q_mean;
  std::vector<double> p2, q2;  // raw second moments
};

// Transported initial part via (Gdot, m Gddot) and (G/m, Gdot), bath-force
// part via FFT convolution with Phi_beta, white-noise part via
// curv * cumulative integrals of Gdot^2 resp. (G/m)^2.
ReducedMoments reduced_moments(const SpectralDensity& J, double curv, double m,
                               double omega, double beta, double hbar,
                               const std::vector<double>& times,
                               const InitialSecondMoments& initial,
                               int grid_n = 4096, int nu_panels = 8192);

// ---------------------------------------------------------------------------
// Long-time limits
// ---------------------------------------------------------------------------

struct LongtimeLimits {
  bool diffusive = false;      // true when omega == 0
  double p2_limit = 0.0;       // thermal p2 + curv * (1/pi) int nu^2 |Ghat|^2
  double q2_limit = 0.0;       // omega > 0 only (NaN otherwise)
  double diffusion_constant = 0.0;  // omega == 0 only
};

LongtimeLimits longtime_limits(const SpectralDensity& J, double curv, double m,
                               double omega, double beta, double hbar);

}  // namespace wndyn
