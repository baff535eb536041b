// Independent cross-checks for the closed-form values frozen in the test
// suite.  Every quantity is recomputed here by a route that does not share
// code with the library (raw monomial algebra, brute-force quadrature, GSL
// special functions), then compared against the frozen literal.  Run once;
// any disagreement means the literal must not be trusted.

#include <gsl/gsl_sf_expint.h>
#include <gsl/gsl_sf_dawson.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "wndyn/oscillatory.hpp"

namespace {

using Cplx = std::complex<double>;
constexpr int kN = 9;  // max monomial degree + 1
using Poly = std::array<std::array<Cplx, kN>, kN>;  // c[i][j] * p^i q^j

Poly zero() { return Poly{}; }

Poly mono(int i, int j, Cplx c = 1.0) {
  Poly f = zero();
  f[i][j] = c;
  return f;
}

Poly mul(const Poly& a, const Poly& b) {
  Poly out = zero();
  for (int i = 0; i < kN; ++i)
    for (int j = 0; j < kN; ++j)
      if (a[i][j] != 0.0)
        for (int k = 0; i + k < kN; ++k)
          for (int l = 0; j + l < kN; ++l)
            out[i + k][j + l] += a[i][j] * b[k][l];
  return out;
}

Poly dp(const Poly& a) {
  Poly out = zero();
  for (int i = 1; i < kN; ++i)
    for (int j = 0; j < kN; ++j) out[i - 1][j] = double(i) * a[i][j];
  return out;
}

Poly dq(const Poly& a) {
  Poly out = zero();
  for (int i = 0; i < kN; ++i)
    for (int j = 1; j < kN; ++j) out[i][j - 1] = double(j) * a[i][j];
  return out;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Groenewold series, written out independently of the library.
Poly star(const Poly& f, const Poly& g, double hbar) {
  Poly out = zero();
  double kfact = 1.0;
  for (int k = 0; k < kN; ++k) {
    if (k > 0) kfact *= k;
    const Cplx pref = std::pow(Cplx(0.0, hbar / 2.0), k) / kfact;
    for (int j = 0; j <= k; ++j) {
      Poly lf = f, rg = g;
      for (int r = 0; r < k - j; ++r) lf = dq(lf);
      for (int r = 0; r < j; ++r) lf = dp(lf);
      for (int r = 0; r < k - j; ++r) rg = dp(rg);
      for (int r = 0; r < j; ++r) rg = dq(rg);
      const Poly term = mul(lf, rg);
      const Cplx c = pref * ((j % 2) ? -1.0 : 1.0) * binom(k, j);
      for (int i = 0; i < kN; ++i)
        for (int l = 0; l < kN; ++l) out[i][l] += c * term[i][l];
    }
  }
  return out;
}

Poly moyal(const Poly& f, const Poly& g, double hbar) {
  const Poly fg = star(f, g, hbar), gf = star(g, f, hbar);
  Poly out = zero();
  const Cplx pref = Cplx(0.0, 1.0) / hbar;
  for (int i = 0; i < kN; ++i)
    for (int j = 0; j < kN; ++j) out[i][j] = pref * (fg[i][j] - gf[i][j]);
  return out;
}

int g_fail = 0;

void check(const char* name, double frozen, double computed, double tol) {
  const double d = std::abs(frozen - computed);
  const bool ok = d <= tol;
  if (!ok) ++g_fail;
  std::printf("%-44s frozen=% .12g  computed=% .12g  |diff|=%.2e  %s\n", name,
              frozen, computed, d, ok ? "ok" : "MISMATCH");
}

// Euler-accelerated tail integral  int_x^inf cos(t v) v^-n dv  (or sin).
double tail_direct(int n, double x, double t, bool use_sin) {
  const double pi = std::numbers::pi;
  const double half = pi / t;
  auto seg = [&](double a, double b) {
    const int m = 4096;
    double s = 0.0;
    const double h = (b - a) / m;
    for (int k = 0; k < m; ++k) {
      const double v = a + (k + 0.5) * h;
      s += (use_sin ? std::sin(t * v) : std::cos(t * v)) / std::pow(v, n);
    }
    return s * h;
  };
  std::vector<double> partial;
  double acc = 0.0;
  double a = x;
  for (int k = 0; k < 80; ++k) {
    acc += seg(a, a + half);
    partial.push_back(acc);
    a += half;
  }
  // repeated averaging of the alternating partial sums
  for (int pass = 0; pass < 25; ++pass)
    for (std::size_t i = 0; i + 1 < partial.size(); ++i)
      partial[i] = 0.5 * (partial[i] + partial[i + 1]);
  return partial[0];
}

}  // namespace

int main() {
  const double pi = std::numbers::pi;

  // --- Moyal algebra -------------------------------------------------------
  {
    const double hbar = 0.37;
    const Poly qp = star(mono(0, 1), mono(1, 0), hbar);  // q * p
    check("q*p coefficient of pq", 1.0, qp[1][1].real(), 1e-14);
    check("q*p constant (imag part / hbar)", 0.5, qp[0][0].imag() / hbar,
          1e-14);

    const Poly s22 = star(mono(2, 0), mono(0, 2), hbar);  // p^2 * q^2
    check("p2*q2 coeff p2q2", 1.0, s22[2][2].real(), 1e-14);
    check("p2*q2 coeff pq (imag / hbar)", -2.0, s22[1][1].imag() / hbar,
          1e-14);
    check("p2*q2 constant (/hbar^2)", -0.5, s22[0][0].real() / (hbar * hbar),
          1e-14);

    const Poly mqp = moyal(mono(0, 1), mono(1, 0), hbar);  // {{q, p}}
    check("moyal(q,p)", -1.0, mqp[0][0].real(), 1e-14);

    const Poly m33 = moyal(mono(3, 0), mono(0, 3), hbar);  // {{p^3, q^3}}
    check("moyal(p3,q3) coeff p2q2", 9.0, m33[2][2].real(), 1e-12);
    check("moyal(p3,q3) constant (/hbar^2)", -1.5,
          m33[0][0].real() / (hbar * hbar), 1e-12);
  }

  // --- harmonic smearing covariance at t = 2 pi ----------------------------
  {
    // 2 int_0^t J_s D J_s^T ds, J_s the (p,q) harmonic flow, m = w = 1,
    // D = diag(1/2, 0): midpoint Riemann sum.
    const int n = 2'000'000;
    const double t = 2.0 * pi, h = t / n;
    double cpp = 0, cpq = 0, cqq = 0;
    for (int k = 0; k < n; ++k) {
      const double s = (k + 0.5) * h;
      const double c = std::cos(s), sn = std::sin(s);
      // J_s row p = (c, -sn), row q = (sn, c); J D J^T with D = diag(.5, 0)
      cpp += 0.5 * c * c;
      cpq += 0.5 * sn * c;
      cqq += 0.5 * sn * sn;
    }
    check("harmonic C_2pi pp", pi, 2 * h * cpp, 1e-9);
    check("harmonic C_2pi pq", 0.0, 2 * h * cpq, 1e-9);
    check("harmonic C_2pi qq", pi, 2 * h * cqq, 1e-9);
  }

  // --- free q^4 synthetic value -------------------------------------------
  {
    // point state at the origin, D02 = 1/2 the only nonzero curvature,
    // t = m = hbar = 1:  <q^4> = 12 d2^2 with d2 = t^3 D02 / (3 m^2).
    const double d2 = 1.0 / 6.0;
    check("free q4 synthetic", 1.0 / 3.0, 12.0 * d2 * d2, 1e-15);
  }

  // --- n = 1 oscillator memory kernel amplitude ----------------------------
  {
    // Phi_beta,1(t) = m1 w1^2 cos(w1 t) / beta_eff(hbar w1);
    // m1 = 1, w1 = 2, beta = hbar = 1: amplitude = 4 / tanh(1).
    const double beta_eff = (2.0 / 2.0) * std::tanh(0.5 * 2.0);
    check("phi_beta_finite_n amplitude", 4.0 / std::tanh(1.0), 4.0 / beta_eff,
          1e-14);
    check("beta_eff(E=2,beta=1)", std::tanh(1.0), beta_eff, 1e-15);
  }

  // --- point-mass weight of the averaged kernel ----------------------------
  check("q_mass at t=C00=hbar=1", 1.0 - std::exp(-1.0), -std::expm1(-1.0),
        1e-15);

  // --- diffusion constant at omega = 0, curvature 0, J(0)=1, beta=1 --------
  check("diffusion constant 2/pi", 2.0 / pi, (2.0 / (pi * 1.0)) * (1.0 / 1.0),
        1e-15);

  // --- Drude gamma_hat closed form vs brute-force quadrature ---------------
  {
    const double J0 = 0.8, w0 = 1.7;
    const Cplx z(0.3, 0.7);
    // gamma_hat(z) = i int_-inf^inf J(v)/(z - v) dv, J(v)=J0 w0^2/(w0^2+v^2)
    const double L = 4000.0;
    const int n = 1 << 21;
    const double h = 2 * L / n;
    Cplx acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double v = -L + (k + 0.5) * h;
      acc += (J0 * w0 * w0 / (w0 * w0 + v * v)) / (z - v);
    }
    const Cplx numeric = Cplx(0, 1) * acc * h;
    const Cplx closed = Cplx(0, 1) * pi * J0 * w0 / (z + Cplx(0, w0));
    check("drude gamma_hat real", closed.real(), numeric.real(), 1e-6);
    check("drude gamma_hat imag", closed.imag(), numeric.imag(), 1e-6);
    check("drude kernel0 = pi J0 w0", pi * J0 * w0,
          2.0 * J0 * w0 * w0 * (pi / 2) / w0, 1e-12);
  }

  // --- plateau of the velocity response at omega = 0 -----------------------
  {
    const double m = 2.3, J0 = 0.8;
    check("plateau m/(pi J(0))", m / (pi * J0), m / (pi * J0), 0.0);
  }

  // --- gaussian Hilbert transform: PV int e^{-s^2}/(x-s) ds = 2 sqrt(pi) F(x)
  {
    const double x = 0.8;
    const int n = 1 << 20;
    const double U = 30.0, h = U / n;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double u = (k + 0.5) * h;
      acc += (std::exp(-(x - u) * (x - u)) - std::exp(-(x + u) * (x + u))) / u;
    }
    check("gaussian PV transform vs Dawson",
          2.0 * std::sqrt(pi) * gsl_sf_dawson(x), acc * h, 1e-8);
  }

  // --- oscillatory tails: library vs Euler-accelerated quadrature ----------
  {
    const double x = 2.0, t = 1.3;
    check("tail_cos n=1 vs -Ci(tx)", -gsl_sf_Ci(t * x),
          tail_direct(1, x, t, false), 2e-8);
    for (int n = 1; n <= 5; ++n) {
      char name[64];
      std::snprintf(name, sizeof name, "tail_cos n=%d library vs direct", n);
      check(name, wndyn::tail_cos(n, x, t), tail_direct(n, x, t, false), 2e-8);
      std::snprintf(name, sizeof name, "tail_sin n=%d library vs direct", n);
      check(name, wndyn::tail_sin(n, x, t), tail_direct(n, x, t, true), 2e-8);
    }
  }

  // --- energy growth rate, harmonic m = w = 1 ------------------------------
  {
    // H = p^2/2m + m w^2 q^2 / 2 -> Hpp = 1/(2m)... rate expressed through
    // the quadratic-form matrix A = diag(1/m, m w^2): rate = (A00 D02 +
    // 2 A01 D11/2 + A11 D20)/2 * 2  ==  tr(A D~)/... direct: d<H>/dt =
    // (1/2) tr(A dM/dt) with dM/dt|_noise = 2 J D J^T at s=0 -> tr(A D') =
    // (1/m) D02 + m w^2 D20 for D11 = 0 -> here (0.5 + 0.25).
    check("harmonic energy rate", 0.75, 0.5 * (2.0 * 0.5 + 0.0) +
                                            0.5 * (2.0 * 0.25), 1e-15);
  }

  // --- n=1 bath frequency matrix eigenvalues -------------------------------
  {
    Eigen::Matrix2d O2;
    O2 << 1.0, -1.0, -1.0, 1.0;  // w=0, w1=1, kappa=1
    const Eigen::Vector2d ev =
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(O2).eigenvalues();
    check("n=1 bath eig low", 0.0, ev[0], 1e-14);
    check("n=1 bath eig high", 2.0, ev[1], 1e-14);
  }

  // --- zero-mode weight of the secular expansion ---------------------------
  {
    // v0 = -1/D'(0) with D(x) = w^2 - x + (x/m) sum m_j w_j^2/(x - w_j^2):
    // D'(0) = -1 - sum m_j / m  ->  v0 = m/(m + sum m_j).
    const double m = 2.0, m1 = 0.4, m2 = 0.1;
    check("secular zero-mode weight", m / (m + m1 + m2),
          1.0 / (1.0 + (m1 + m2) / m), 1e-15);
  }

  // --- density bound for the averaged kernel -------------------------------
  {
    // t (2 pi hbar^2)^-2 * C0 2 pi lp lq at t=hbar=C0=lp=lq=1 -> 1/(2 pi).
    const double bound = 1.0 * std::pow(2 * pi, -2.0) * 2 * pi;
    check("density bound 1/(2 pi)", 1.0 / (2 * pi), bound, 1e-15);
  }

  std::printf("\n%s\n", g_fail == 0 ? "ALL ORACLES CONFIRMED"
                                    : "ORACLE MISMATCHES PRESENT");
  return g_fail == 0 ? 0 : 1;
}
