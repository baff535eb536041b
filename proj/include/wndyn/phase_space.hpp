#pragma once

// Quadratic Hamiltonians on phase space, their linear symplectic flows, and
// the star-product algebra of polynomial symbols in (p, q).
//
// Coordinate ordering is fixed everywhere as (p-block, q-block): a phase-space
// point is z = (p_1..p_d, q_1..q_d).  The canonical symplectic form in this
// ordering is Sigma = [[0, I], [-I, 0]].

#include <complex>
#include <map>
#include <utility>

#include <Eigen/Dense>

namespace wndyn {

/// Canonical symplectic form matrix [[0, I], [-I, 0]] for `dim` canonical
/// pairs, a 2*dim x 2*dim matrix in (p-block, q-block) ordering.
Eigen::MatrixXd symplectic_form(int dim);

/// Hamiltonian H(z) = (1/2) z . A z that is at most quadratic in (p, q).
/// A must be symmetric; hbar is carried along for downstream consumers.
struct QuadraticHamiltonian {
  int dim = 1;          ///< number of canonical pairs
  Eigen::MatrixXd A;    ///< symmetric 2*dim x 2*dim coefficient matrix
  double hbar = 1.0;

  QuadraticHamiltonian(int dim_, Eigen::MatrixXd A_, double hbar_);

  /// Energy (1/2) z . A z at the phase-space point z.
  double energy(const Eigen::VectorXd& z) const;

  /// H = p^2 / (2m).
  static QuadraticHamiltonian free_particle(double m, double hbar);

  /// H = p^2 / (2m) + (1/2) m omega^2 q^2.
  static QuadraticHamiltonian harmonic(double m, double omega, double hbar);
};

/// Jacobian J_t of the linear Hamiltonian flow: z(t) = J_t z(0).
/// J_t is symplectic (J^T Sigma J = Sigma, det J = 1) and J_0 = I.
struct FlowJacobian {
  double t = 0.0;
  Eigen::MatrixXd J;
};

/// Flow Jacobian J_t = exp(t G) with generator G = -Sigma A, so that
/// pdot = -dH/dq and qdot = dH/dp.  Computed by scaling-and-squaring matrix
/// exponential, which handles the non-diagonalizable free-particle generator.
FlowJacobian flow_jacobian(const QuadraticHamiltonian& H, double t);

/// Symplectic adjugate M_sharp = -Sigma M^T Sigma.  For a symplectic matrix
/// J this equals J^{-1}.
Eigen::MatrixXd sharp(const Eigen::MatrixXd& M);

/// Complex polynomial in the scalar phase-space variables (p, q), stored as a
/// sparse map (mu, nu) -> coefficient of p^mu q^nu.  Used for the one-pair
/// (dim = 1) symbol calculus.
class PolynomialSymbol {
 public:
  using Key = std::pair<int, int>;  ///< (power of p, power of q)
  using Coeff = std::complex<double>;

  explicit PolynomialSymbol(double hbar = 1.0) : hbar_(hbar) {}

  /// Symbol c * p^mu q^nu.
  static PolynomialSymbol monomial(int mu, int nu, Coeff c, double hbar = 1.0);
  /// Constant symbol c.
  static PolynomialSymbol constant(Coeff c, double hbar = 1.0);

  double hbar() const { return hbar_; }
  const std::map<Key, Coeff>& coefficients() const { return coeffs_; }

  /// Coefficient of p^mu q^nu (zero if absent).
  Coeff coeff(int mu, int nu) const;
  /// Add c * p^mu q^nu in place.
  void add_term(int mu, int nu, Coeff c);

  /// Total degree max(mu + nu) over stored terms; -1 for the zero symbol.
  int degree() const;
  /// True when every coefficient has magnitude <= tol.
  bool is_zero(double tol = 0.0) const;
  /// Remove coefficients with magnitude <= tol.
  void prune(double tol = 1e-14);

  /// Value of the polynomial at the point (p, q).
  Coeff eval(double p, double q) const;

  /// Partial derivative with respect to p.
  PolynomialSymbol derivative_p() const;
  /// Partial derivative with respect to q.
  PolynomialSymbol derivative_q() const;

  PolynomialSymbol operator+(const PolynomialSymbol& rhs) const;
  PolynomialSymbol operator-(const PolynomialSymbol& rhs) const;
  /// Pointwise (commutative) polynomial product.
  PolynomialSymbol operator*(const PolynomialSymbol& rhs) const;
  PolynomialSymbol operator*(Coeff scalar) const;
  PolynomialSymbol operator-() const;

  /// Coefficient-wise comparison within tolerance.
  bool approx_equal(const PolynomialSymbol& rhs, double tol = 1e-12) const;

 private:
  std::map<Key, Coeff> coeffs_;
  double hbar_;
};

/// Noncommutative star product f * g: the bidifferential series
///   sum_k (1/k!) (i hbar / 2)^k sum_j (-1)^j C(k,j)
///         (d_q^{k-j} d_p^j f) (d_p^{k-j} d_q^j g),
/// which terminates on polynomials.  Satisfies q * p = pq + i hbar / 2.
PolynomialSymbol star_product(const PolynomialSymbol& f, const PolynomialSymbol& g);

/// Scaled commutator (i/hbar)(f*g - g*f).  Normalized so that the canonical
/// pair gives moyal_bracket(q, p) = -1, and reduces exactly to
/// poisson_bracket whenever deg f <= 2 or deg g <= 2.
PolynomialSymbol moyal_bracket(const PolynomialSymbol& f, const PolynomialSymbol& g);

/// Classical bracket (d_p f)(d_q g) - (d_q f)(d_p g); the hbar -> 0 limit of
/// moyal_bracket.  poisson_bracket(q, p) = -1.
PolynomialSymbol poisson_bracket(const PolynomialSymbol& f, const PolynomialSymbol& g);

}  // namespace wndyn
