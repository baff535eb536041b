#include "wndyn/phase_space.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

namespace wndyn {

Eigen::MatrixXd symplectic_form(int dim) {
  if (dim < 1) throw std::invalid_argument("symplectic_form: dim must be >= 1");
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2 * dim, 2 * dim);
  S.topRightCorner(dim, dim) = Eigen::MatrixXd::Identity(dim, dim);
  S.bottomLeftCorner(dim, dim) = -Eigen::MatrixXd::Identity(dim, dim);
  return S;
}

QuadraticHamiltonian::QuadraticHamiltonian(int dim_, Eigen::MatrixXd A_, double hbar_)
    : dim(dim_), A(std::move(A_)), hbar(hbar_) {
  if (dim < 1) throw std::invalid_argument("QuadraticHamiltonian: dim must be >= 1");
  if (A.rows() != 2 * dim || A.cols() != 2 * dim)
    throw std::invalid_argument("QuadraticHamiltonian: A must be 2*dim x 2*dim");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("QuadraticHamiltonian: A must be symmetric");
  if (!(hbar > 0.0))
    throw std::invalid_argument("QuadraticHamiltonian: hbar must be positive");
  A = 0.5 * (A + A.transpose().eval());  // symmetrize away roundoff
}

double QuadraticHamiltonian::energy(const Eigen::VectorXd& z) const {
  if (z.size() != 2 * dim)
    throw std::invalid_argument("QuadraticHamiltonian::energy: z has wrong size");
  return 0.5 * z.dot(A * z);
}

QuadraticHamiltonian QuadraticHamiltonian::free_particle(double m, double hbar) {
  if (!(m > 0.0)) throw std::invalid_argument("free_particle: m must be positive");
  Eigen::MatrixXd A(2, 2);
  A << 1.0 / m, 0.0, 0.0, 0.0;
  return QuadraticHamiltonian(1, A, hbar);
}

QuadraticHamiltonian QuadraticHamiltonian::harmonic(double m, double omega, double hbar) {
  if (!(m > 0.0)) throw std::invalid_argument("harmonic: m must be positive");
  if (omega < 0.0) throw std::invalid_argument("harmonic: omega must be >= 0");
  Eigen::MatrixXd A(2, 2);
  A << 1.0 / m, 0.0, 0.0, m * omega * omega;
  return QuadraticHamiltonian(1, A, hbar);
}

FlowJacobian flow_jacobian(const QuadraticHamiltonian& H, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("flow_jacobian: t must be finite");
  const Eigen::MatrixXd G = -symplectic_form(H.dim) * H.A;
  FlowJacobian out;
  out.t = t;
  out.J = (t * G).exp();
  return out;
}

Eigen::MatrixXd sharp(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() % 2 != 0)
    throw std::invalid_argument("sharp: matrix must be square of even size");
  const Eigen::MatrixXd S = symplectic_form(static_cast<int>(M.rows()) / 2);
  return -S * M.transpose() * S;
}

// ---------------------------------------------------------------------------
// PolynomialSymbol
// ---------------------------------------------------------------------------

PolynomialSymbol PolynomialSymbol::monomial(int mu, int nu, Coeff c, double hbar) {
  if (mu < 0 || nu < 0)
    throw std::invalid_argument("PolynomialSymbol::monomial: negative exponent");
  PolynomialSymbol s(hbar);
  s.add_term(mu, nu, c);
  return s;
}

PolynomialSymbol PolynomialSymbol::constant(Coeff c, double hbar) {
  return monomial(0, 0, c, hbar);
}

PolynomialSymbol::Coeff PolynomialSymbol::coeff(int mu, int nu) const {
  const auto it = coeffs_.find({mu, nu});
  return it == coeffs_.end() ? Coeff{0.0, 0.0} : it->second;
}

void PolynomialSymbol::add_term(int mu, int nu, Coeff c) {
  if (mu < 0 || nu < 0)
    throw std::invalid_argument("PolynomialSymbol::add_term: negative exponent");
  if (c == Coeff{0.0, 0.0}) return;
  auto [it, inserted] = coeffs_.try_emplace({mu, nu}, c);
  if (!inserted) {
    it->second += c;
    if (it->second == Coeff{0.0, 0.0}) coeffs_.erase(it);
  }
}

int PolynomialSymbol::degree() const {
  int deg = -1;
  for (const auto& [key, c] : coeffs_) deg = std::max(deg, key.first + key.second);
  return deg;
}

bool PolynomialSymbol::is_zero(double tol) const {
  for (const auto& [key, c] : coeffs_)
    if (std::abs(c) > tol) return false;
  return true;
}

void PolynomialSymbol::prune(double tol) {
  for (auto it = coeffs_.begin(); it != coeffs_.end();) {
    if (std::abs(it->second) <= tol)
      it = coeffs_.erase(it);
    else
      ++it;
  }
}

PolynomialSymbol::Coeff PolynomialSymbol::eval(double p, double q) const {
  Coeff sum{0.0, 0.0};
  for (const auto& [key, c] : coeffs_)
    sum += c * std::pow(p, key.first) * std::pow(q, key.second);
  return sum;
}

PolynomialSymbol PolynomialSymbol::derivative_p() const {
  PolynomialSymbol out(hbar_);
  for (const auto& [key, c] : coeffs_)
    if (key.first > 0)
      out.add_term(key.first - 1, key.second, c * static_cast<double>(key.first));
  return out;
}

PolynomialSymbol PolynomialSymbol::derivative_q() const {
  PolynomialSymbol out(hbar_);
  for (const auto& [key, c] : coeffs_)
    if (key.second > 0)
      out.add_term(key.first, key.second - 1, c * static_cast<double>(key.second));
  return out;
}

namespace {

void require_same_hbar(const PolynomialSymbol& f, const PolynomialSymbol& g,
                       const char* what) {
  if (f.hbar() != g.hbar())
    throw std::invalid_argument(std::string(what) + ": operands carry different hbar");
}

}  // namespace

PolynomialSymbol PolynomialSymbol::operator+(const PolynomialSymbol& rhs) const {
  require_same_hbar(*this, rhs, "PolynomialSymbol::operator+");
  PolynomialSymbol out = *this;
  for (const auto& [key, c] : rhs.coeffs_) out.add_term(key.first, key.second, c);
  return out;
}

PolynomialSymbol PolynomialSymbol::operator-(const PolynomialSymbol& rhs) const {
  require_same_hbar(*this, rhs, "PolynomialSymbol::operator-");
  PolynomialSymbol out = *this;
  for (const auto& [key, c] : rhs.coeffs_) out.add_term(key.first, key.second, -c);
  return out;
}

PolynomialSymbol PolynomialSymbol::operator*(const PolynomialSymbol& rhs) const {
  require_same_hbar(*this, rhs, "PolynomialSymbol::operator*");
  PolynomialSymbol out(hbar_);
  for (const auto& [ka, ca] : coeffs_)
    for (const auto& [kb, cb] : rhs.coeffs_)
      out.add_term(ka.first + kb.first, ka.second + kb.second, ca * cb);
  return out;
}

PolynomialSymbol PolynomialSymbol::operator*(Coeff scalar) const {
  PolynomialSymbol out(hbar_);
  for (const auto& [key, c] : coeffs_) out.add_term(key.first, key.second, c * scalar);
  return out;
}

PolynomialSymbol PolynomialSymbol::operator-() const {
  return (*this) * Coeff{-1.0, 0.0};
}

bool PolynomialSymbol::approx_equal(const PolynomialSymbol& rhs, double tol) const {
  return ((*this) - rhs).is_zero(tol);
}

namespace {

// (d_q^a d_p^b f): repeated partial derivatives.
PolynomialSymbol mixed_derivative(const PolynomialSymbol& f, int dq, int dp) {
  PolynomialSymbol out = f;
  for (int i = 0; i < dq; ++i) out = out.derivative_q();
  for (int i = 0; i < dp; ++i) out = out.derivative_p();
  return out;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
  return r;
}

}  // namespace

PolynomialSymbol star_product(const PolynomialSymbol& f, const PolynomialSymbol& g) {
  require_same_hbar(f, g, "star_product");
  const double hbar = f.hbar();
  const int kmax = std::max(0, std::min(f.degree(), g.degree()));
  PolynomialSymbol out(hbar);
  const std::complex<double> lam{0.0, hbar / 2.0};  // i*hbar/2
  std::complex<double> prefac{1.0, 0.0};            // lam^k / k!
  for (int k = 0; k <= kmax; ++k) {
    if (k > 0) prefac *= lam / static_cast<double>(k);
    PolynomialSymbol term_k(hbar);
    for (int j = 0; j <= k; ++j) {
      const PolynomialSymbol df = mixed_derivative(f, k - j, j);
      const PolynomialSymbol dg = mixed_derivative(g, j, k - j);
      if (df.is_zero() || dg.is_zero()) continue;
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      term_k = term_k + (df * dg) * std::complex<double>{sign * binomial(k, j), 0.0};
    }
    out = out + term_k * prefac;
  }
  out.prune(0.0);
  return out;
}

PolynomialSymbol moyal_bracket(const PolynomialSymbol& f, const PolynomialSymbol& g) {
  require_same_hbar(f, g, "moyal_bracket");
  const double hbar = f.hbar();
  // Order 1 is written with the same expression as poisson_bracket so the
  // reduction for quadratic symbols is coefficient-exact, not merely close;
  // even orders cancel in the commutator, so only odd k >= 3 remain.
  PolynomialSymbol out =
      f.derivative_p() * g.derivative_q() - f.derivative_q() * g.derivative_p();
  const int kmax = std::max(0, std::min(f.degree(), g.degree()));
  const std::complex<double> lam{0.0, hbar / 2.0};  // i*hbar/2
  const std::complex<double> two_i_over_hbar{0.0, 2.0 / hbar};
  std::complex<double> prefac{1.0, 0.0};            // lam^k / k!
  for (int k = 1; k <= kmax; ++k) {
    prefac *= lam / static_cast<double>(k);
    if (k == 1 || k % 2 == 0) continue;
    PolynomialSymbol term_k(f.hbar());
    for (int j = 0; j <= k; ++j) {
      const PolynomialSymbol df = mixed_derivative(f, k - j, j);
      const PolynomialSymbol dg = mixed_derivative(g, j, k - j);
      if (df.is_zero() || dg.is_zero()) continue;
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      term_k = term_k + (df * dg) * std::complex<double>{sign * binomial(k, j), 0.0};
    }
    out = out + term_k * (prefac * two_i_over_hbar);
  }
  out.prune(0.0);
  return out;
}

PolynomialSymbol poisson_bracket(const PolynomialSymbol& f, const PolynomialSymbol& g) {
  require_same_hbar(f, g, "poisson_bracket");
  return f.derivative_p() * g.derivative_q() - f.derivative_q() * g.derivative_p();
}

}  // namespace wndyn
