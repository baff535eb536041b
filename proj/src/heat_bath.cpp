#include "wndyn/heat_bath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "wndyn/errors.hpp"
#include "wndyn/fft_utils.hpp"
#include "wndyn/oscillatory.hpp"
#include "wndyn/quadrature.hpp"

namespace wndyn {

namespace {
constexpr double kPi = std::numbers::pi;
}

// ---------------------------------------------------------------------------
// SpectralDensity
// ---------------------------------------------------------------------------

SpectralDensity SpectralDensity::drude(double J0, double omega0) {
  if (!(J0 > 0.0) || !(omega0 > 0.0))
    throw std::invalid_argument("SpectralDensity::drude: parameters must be > 0");
  SpectralDensity J;
  J.family = SpectralFamily::kDrude;
  J.J0 = J0;
  J.omega0 = omega0;
  return J;
}

SpectralDensity SpectralDensity::gaussian(double J0, double omega0) {
  if (!(J0 > 0.0) || !(omega0 > 0.0))
    throw std::invalid_argument("SpectralDensity::gaussian: parameters must be > 0");
  SpectralDensity J;
  J.family = SpectralFamily::kGaussian;
  J.J0 = J0;
  J.omega0 = omega0;
  return J;
}

SpectralDensity SpectralDensity::tabulated(std::vector<double> nu,
                                           std::vector<double> J) {
  if (nu.size() != J.size() || nu.size() < 2)
    throw std::invalid_argument("SpectralDensity::tabulated: need >= 2 paired samples");
  // Fold symmetric samples onto nu >= 0, verifying evenness.
  std::vector<std::pair<double, double>> pos;
  std::vector<std::pair<double, double>> neg;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (!std::isfinite(nu[i]) || !std::isfinite(J[i]))
      throw std::invalid_argument("SpectralDensity::tabulated: non-finite sample");
    if (nu[i] >= 0.0)
      pos.emplace_back(nu[i], J[i]);
    else
      neg.emplace_back(-nu[i], J[i]);
  }
  std::sort(pos.begin(), pos.end());
  for (const auto& [nv, jv] : neg) {
    auto it = std::lower_bound(pos.begin(), pos.end(), std::make_pair(nv, -1.0));
    if (it == pos.end() || std::abs(it->first - nv) > 1e-9 * (1.0 + nv) ||
        std::abs(it->second - jv) > 1e-9 * (1.0 + std::abs(jv)))
      throw std::invalid_argument(
          "SpectralDensity::tabulated: samples not symmetric about nu = 0");
  }
  for (std::size_t i = 1; i < pos.size(); ++i)
    if (!(pos[i].first > pos[i - 1].first))
      throw std::invalid_argument("SpectralDensity::tabulated: duplicate frequencies");
  if (pos.size() < 2)
    throw std::invalid_argument("SpectralDensity::tabulated: need >= 2 samples on nu >= 0");
  if (pos.front().first > 0.0) {
    // extend flat to nu = 0 so J(0) is defined
    pos.insert(pos.begin(), {0.0, pos.front().second});
  }
  SpectralDensity out;
  out.family = SpectralFamily::kTabulated;
  out.nu_tab.reserve(pos.size());
  out.J_tab.reserve(pos.size());
  for (const auto& [nv, jv] : pos) {
    out.nu_tab.push_back(nv);
    out.J_tab.push_back(jv);
  }
  return out;
}

SpectralDensity SpectralDensity::tabulated_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("nu") || !j.contains("J"))
    throw std::invalid_argument("tabulated_from_json: need keys \"nu\" and \"J\"");
  return tabulated(j.at("nu").get<std::vector<double>>(),
                   j.at("J").get<std::vector<double>>());
}

double SpectralDensity::operator()(double nu) const {
  const double x = std::abs(nu);
  switch (family) {
    case SpectralFamily::kDrude:
      return J0 * omega0 * omega0 / (x * x + omega0 * omega0);
    case SpectralFamily::kGaussian:
      return J0 * std::exp(-0.5 * x * x / (omega0 * omega0));
    case SpectralFamily::kTabulated: {
      if (x > nu_tab.back()) return 0.0;
      auto it = std::upper_bound(nu_tab.begin(), nu_tab.end(), x);
      if (it == nu_tab.begin()) return J_tab.front();
      const std::size_t hi = static_cast<std::size_t>(it - nu_tab.begin());
      if (hi >= nu_tab.size()) return J_tab.back();
      const double x0 = nu_tab[hi - 1], x1 = nu_tab[hi];
      const double f = (x - x0) / (x1 - x0);
      return (1.0 - f) * J_tab[hi - 1] + f * J_tab[hi];
    }
  }
  return 0.0;
}

double SpectralDensity::limit_L() const {
  switch (family) {
    case SpectralFamily::kDrude:
      return J0 * omega0 * omega0;
    case SpectralFamily::kGaussian:
      return 0.0;
    case SpectralFamily::kTabulated: {
      double s_max = 0.0;
      for (std::size_t i = 0; i < nu_tab.size(); ++i)
        s_max = std::max(s_max, nu_tab[i] * nu_tab[i] * J_tab[i]);
      const double s_end = nu_tab.back() * nu_tab.back() * J_tab.back();
      return (s_end > 0.05 * s_max) ? s_end : 0.0;
    }
  }
  return 0.0;
}

double SpectralDensity::kernel0() const {
  switch (family) {
    case SpectralFamily::kDrude:
      return kPi * J0 * omega0;
    case SpectralFamily::kGaussian:
      return J0 * omega0 * std::sqrt(2.0 * kPi);
    case SpectralFamily::kTabulated: {
      double sum = 0.0;
      for (std::size_t i = 1; i < nu_tab.size(); ++i)
        sum += 0.5 * (J_tab[i] + J_tab[i - 1]) * (nu_tab[i] - nu_tab[i - 1]);
      return 2.0 * sum;
    }
  }
  return 0.0;
}

double SpectralDensity::nu_cutoff() const {
  switch (family) {
    case SpectralFamily::kDrude:
      return omega0 * std::sqrt(99.0);  // nu^2 J = 0.99 L
    case SpectralFamily::kGaussian: {
      const double s_max = 2.0 * omega0 * omega0 * J0 * std::exp(-1.0);
      double nu = std::sqrt(2.0) * omega0;
      while (nu * nu * (*this)(nu) > 0.01 * s_max) nu += 0.01 * omega0;
      return nu;
    }
    case SpectralFamily::kTabulated:
      return nu_tab.back();
  }
  return 0.0;
}

void SpectralDensity::check_admissible() const {
  if ((*this)(0.0) <= 0.0)
    throw AssumptionViolation("spectral density must be strictly positive at nu = 0");
  if (family != SpectralFamily::kTabulated) return;  // families are admissible by shape
  for (double v : J_tab)
    if (!(v > 0.0))
      throw AssumptionViolation(
          "tabulated spectral density must be strictly positive on its range");
  // Tail classification: nu^2 J must either have decayed (L = 0) or leveled
  // off (L > 0).  A still-growing tail (e.g. constant, Ohmic-type J) is out.
  const std::size_t n = nu_tab.size();
  double s_max = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s_max = std::max(s_max, nu_tab[i] * nu_tab[i] * J_tab[i]);
  const double s_end = nu_tab.back() * nu_tab.back() * J_tab.back();
  if (s_end <= 0.05 * s_max) return;  // decayed: L = 0
  const std::size_t k = std::max<std::size_t>(3, n / 10);
  const std::size_t i0 = n - 1 - std::min(n - 2, k);
  const double s0 = nu_tab[i0] * nu_tab[i0] * J_tab[i0];
  if (!(nu_tab[i0] > 0.0) || !(s0 > 0.0))
    throw AssumptionViolation("tabulated spectral density tail is degenerate");
  const double slope = (std::log(s_end) - std::log(s0)) /
                       (std::log(nu_tab.back()) - std::log(nu_tab[i0]));
  if (std::abs(slope) >= 0.5)
    throw AssumptionViolation(
        "spectral density tail does not fall off like 1/nu^2 "
        "(Ohmic-type tails are excluded)");
}

// ---------------------------------------------------------------------------
// gamma_hat
// ---------------------------------------------------------------------------

namespace {

// PV int_{-inf}^{inf} J(nu')/(nu - nu') dnu' via the folded form
// int_0^inf [J(nu - u) - J(nu + u)]/u du.
double pv_hilbert(const SpectralDensity& J, double nu) {
  const double scale = std::max(1.0, J.nu_cutoff());
  const double eps = 1e-7 * (std::abs(nu) + scale);
  const double U = 3.0 * (std::abs(nu) + J.nu_cutoff()) + 10.0 * scale;
  auto f = [&](double u) {
    const double uu = std::max(u, eps);
    return (J(nu - uu) - J(nu + uu)) / uu;
  };
  return adaptive_simpson(f, 0.0, U, 1e-9, 1e-12 * J(0.0) * scale);
}

// gamma_hat on the positive imaginary axis: gamma_hat(i y) =
// 2 y int_0^inf J(nu)/(nu^2 + y^2) dnu  (real and positive).
double gamma_hat_imag_axis(const SpectralDensity& J, double y) {
  const double cut = J.nu_cutoff();
  auto f = [&](double nu) { return J(nu) / (nu * nu + y * y); };
  double val = 2.0 * y * adaptive_simpson(f, 0.0, cut, 1e-10, 1e-14 * J(0.0));
  const double L = J.limit_L();
  if (L > 0.0) {
    // tail with J ~ L/nu^2
    val += (2.0 * L / y) *
           (1.0 / cut - (kPi / 2.0 - std::atan(cut / y)) / y);
  }
  return val;
}

}  // namespace

cplx gamma_hat(const SpectralDensity& J, cplx z) {
  if (z.imag() < 0.0)
    throw std::invalid_argument("gamma_hat: defined on the closed upper half plane");
  if (J.family == SpectralFamily::kDrude) {
    return cplx(0.0, kPi * J.J0 * J.omega0) / (z + cplx(0.0, J.omega0));
  }
  if (z.imag() == 0.0) {
    const double nu = z.real();
    double im;
    if (J.family == SpectralFamily::kGaussian) {
      im = 2.0 * std::sqrt(kPi) * J.J0 * dawson(nu / (std::sqrt(2.0) * J.omega0));
    } else {
      im = pv_hilbert(J, nu);
    }
    return cplx(kPi * J(nu), im);
  }
  if (z.real() == 0.0) {
    return cplx(gamma_hat_imag_axis(J, z.imag()), 0.0);
  }
  // general upper half plane: gamma_hat(z) = i int J(nu')/(z - nu') dnu'
  const double U = std::max(3.0 * J.nu_cutoff(), 5.0 * std::abs(z) + 50.0);
  const double x = z.real(), y = z.imag();
  auto fre = [&](double nup) {
    const double dx = x - nup;
    return J(nup) * y / (dx * dx + y * y);
  };
  auto fim = [&](double nup) {
    const double dx = x - nup;
    return J(nup) * dx / (dx * dx + y * y);
  };
  const double re = adaptive_simpson(fre, -U, U, 1e-9, 1e-13 * J(0.0));
  const double im = adaptive_simpson(fim, -U, U, 1e-9, 1e-13 * J(0.0));
  return cplx(re, im);
}

// ---------------------------------------------------------------------------
// Finite baths
// ---------------------------------------------------------------------------

void BathSpec::validate() const {
  if (n < 0) throw std::invalid_argument("BathSpec: n must be >= 0");
  if (static_cast<int>(masses.size()) != n ||
      static_cast<int>(frequencies.size()) != n)
    throw std::invalid_argument("BathSpec: need n masses and n frequencies");
  for (double mj : masses)
    if (!(mj > 0.0)) throw std::invalid_argument("BathSpec: masses must be > 0");
  double prev = 0.0;
  for (double wj : frequencies) {
    if (!(wj > prev))
      throw std::invalid_argument(
          "BathSpec: frequencies must be strictly increasing and > 0");
    prev = wj;
  }
  if (!(m > 0.0)) throw std::invalid_argument("BathSpec: system mass must be > 0");
  if (!(omega >= 0.0)) throw std::invalid_argument("BathSpec: omega must be >= 0");
}

BathMatrices build_bath(const BathSpec& spec) {
  spec.validate();
  const int n = spec.n;
  BathMatrices out;
  out.M_diag.resize(n + 1);
  out.M_diag(0) = spec.m;
  for (int j = 0; j < n; ++j) out.M_diag(j + 1) = spec.masses[j];
  out.Omega2 = Eigen::MatrixXd::Zero(n + 1, n + 1);
  double diag0 = spec.omega * spec.omega;
  for (int j = 0; j < n; ++j) {
    const double wj = spec.frequencies[j];
    const double kappa = std::sqrt(spec.masses[j] / spec.m);
    diag0 += (spec.masses[j] / spec.m) * wj * wj;
    out.Omega2(0, j + 1) = -kappa * wj * wj;
    out.Omega2(j + 1, 0) = -kappa * wj * wj;
    out.Omega2(j + 1, j + 1) = wj * wj;
  }
  out.Omega2(0, 0) = diag0;
  return out;
}

BathSpec discretize_bath(const SpectralDensity& J, int n, double cutoff,
                         double system_mass, double system_omega) {
  if (n < 1) throw std::invalid_argument("discretize_bath: need n >= 1");
  if (!(cutoff > 0.0)) throw std::invalid_argument("discretize_bath: cutoff must be > 0");
  BathSpec spec;
  spec.n = n;
  spec.m = system_mass;
  spec.omega = system_omega;
  const double width = cutoff / n;
  for (int k = 0; k < n; ++k) {
    const double lo = k * width, hi = (k + 1) * width;
    const double wj = 0.5 * (lo + hi);
    const double integral =
        adaptive_simpson([&](double nu) { return J(nu); }, lo, hi, 1e-10,
                         1e-14 * J(0.0) * width);
    spec.frequencies.push_back(wj);
    spec.masses.push_back(2.0 * integral / (wj * wj));
  }
  spec.validate();
  return spec;
}

FiniteBath::FiniteBath(const BathSpec& spec) : spec_(spec), mat_(build_bath(spec)) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat_.Omega2);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("FiniteBath: eigendecomposition failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  freq_.resize(ev.size());
  weight_.resize(ev.size());
  for (int k = 0; k < ev.size(); ++k) {
    freq_(k) = std::sqrt(std::max(0.0, ev(k)));
    const double u0 = es.eigenvectors()(0, k);
    weight_(k) = u0 * u0;
  }
}

double FiniteBath::cos00(double s) const {
  double sum = 0.0;
  for (int k = 0; k < freq_.size(); ++k)
    sum += weight_(k) * std::cos(freq_(k) * s);
  return sum;
}

double FiniteBath::gn(double s) const {
  if (s < 0.0) return 0.0;
  double sum = 0.0;
  for (int k = 0; k < freq_.size(); ++k) {
    const double f = freq_(k);
    sum += weight_(k) * (f == 0.0 ? s : std::sin(f * s) / f);
  }
  return sum;
}

FiniteNMoments finite_n_moments(const FiniteBath& bath, double curv, double t) {
  if (t < 0.0) throw std::invalid_argument("finite_n_moments: t must be >= 0");
  FiniteNMoments out;
  if (t == 0.0 || curv == 0.0) return out;
  const double m = bath.spec().m;
  out.p2_added = curv * adaptive_simpson(
                            [&](double s) {
                              const double c = bath.cos00(s);
                              return c * c;
                            },
                            0.0, t, 1e-8, 1e-12 * t);
  out.q2_added =
      curv / (m * m) *
      adaptive_simpson(
          [&](double s) {
            const double g = bath.gn(s);
            return g * g;
          },
          0.0, t, 1e-8, 1e-12 * t * std::max(1.0, t * t));
  return out;
}

FiniteNMoments finite_n_moments(const BathSpec& spec, double curv, double t) {
  return finite_n_moments(FiniteBath(spec), curv, t);
}

namespace {

// Secular-equation route: roots of
//   D(xi) = omega^2 - xi + (xi/m) sum_j m_j w_j^2 / (xi - w_j^2)
// interlace the squared bath frequencies; the partial-fraction weights are
// v_k = -1/D'(r_k), and (sin(Omega s)/Omega)_00 = sum_k v_k sin(sqrt(r_k) s)/sqrt(r_k).
double gn_secular(const BathSpec& spec, double s) {
  if (s < 0.0) return 0.0;
  const int n = spec.n;
  const double w2 = spec.omega * spec.omega;
  auto D = [&](double xi) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double P = spec.frequencies[j] * spec.frequencies[j];
      sum += spec.masses[j] * P / (xi - P);
    }
    return w2 - xi + xi * sum / spec.m;
  };
  auto Dprime = [&](double xi) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double P = spec.frequencies[j] * spec.frequencies[j];
      const double d = xi - P;
      sum += spec.masses[j] * P * P / (d * d);
    }
    return -1.0 - sum / spec.m;
  };
  std::vector<double> poles(n);
  for (int j = 0; j < n; ++j) poles[j] = spec.frequencies[j] * spec.frequencies[j];

  auto bisect = [&](double lo, double hi) {
    double flo = D(lo);
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double fm = D(mid);
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  std::vector<double> roots, weights;
  // root below the first pole
  if (n == 0) {
    roots.push_back(w2);
    weights.push_back(1.0);
  } else {
    if (spec.omega == 0.0) {
      roots.push_back(0.0);  // exact zero root of the free total system
      weights.push_back(-1.0 / Dprime(0.0));
    } else {
      const double hi = poles[0] * (1.0 - 1e-13);
      roots.push_back(bisect(0.0, hi));
      weights.push_back(-1.0 / Dprime(roots.back()));
    }
    // one root between each adjacent pole pair
    for (int j = 0; j + 1 < n; ++j) {
      const double lo = poles[j] * (1.0 + 1e-13);
      const double hi = poles[j + 1] * (1.0 - 1e-13);
      roots.push_back(bisect(lo, hi));
      weights.push_back(-1.0 / Dprime(roots.back()));
    }
    // root above the last pole
    double lo = poles[n - 1] * (1.0 + 1e-13);
    double hi = poles[n - 1] + std::max(1.0, poles[n - 1]);
    while (D(hi) > 0.0) hi += std::max(1.0, hi);
    roots.push_back(bisect(lo, hi));
    weights.push_back(-1.0 / Dprime(roots.back()));
  }

  double sum = 0.0;
  for (std::size_t k = 0; k < roots.size(); ++k) {
    const double r = roots[k];
    const double f = std::sqrt(std::max(0.0, r));
    sum += weights[k] * (f == 0.0 ? s : std::sin(f * s) / f);
  }
  return sum;
}

}  // namespace

double gn_identity_check(const FiniteBath& bath, double s) {
  return std::abs(bath.gn(s) - gn_secular(bath.spec(), s));
}

// ---------------------------------------------------------------------------
// GreenFunction
// ---------------------------------------------------------------------------

namespace {

// One fused Filon sweep: cos- and sin-phase integrals over [0, N h] of several
// sample arrays sharing the trigonometric evaluations at the nodes.
struct FilonJob {
  const std::vector<double>* f;
  bool sine;
};

void filon_fused(const std::vector<FilonJob>& jobs, double h, double t,
                 std::vector<double>* out) {
  const std::size_t n = jobs.front().f->size() - 1;
  const FilonCoefficients c = filon_coefficients(t * h);
  const std::size_t m = jobs.size();
  std::vector<double> even(m, 0.0), odd(m, 0.0);
  for (std::size_t j = 0; j <= n; ++j) {
    const double x = j * h;
    const double cw = std::cos(t * x);
    const double sw = std::sin(t * x);
    const bool is_even = (j % 2 == 0);
    const double half = (j == 0 || j == n) ? 0.5 : 1.0;
    for (std::size_t q = 0; q < m; ++q) {
      const double w = jobs[q].sine ? sw : cw;
      const double val = (*jobs[q].f)[j] * w;
      if (is_even)
        even[q] += half * val;
      else
        odd[q] += val;
    }
  }
  const double xb = n * h;
  const double sb = std::sin(t * xb), cb = std::cos(t * xb);
  out->resize(m);
  for (std::size_t q = 0; q < m; ++q) {
    const std::vector<double>& f = *jobs[q].f;
    double boundary;
    if (jobs[q].sine)
      boundary = -c.alpha * (f[n] * cb - f[0] * 1.0);
    else
      boundary = c.alpha * (f[n] * sb - f[0] * 0.0);
    (*out)[q] = h * (boundary + c.beta * even[q] + c.gamma * odd[q]);
  }
}

struct GhatContext {
  const SpectralDensity* J;
  double m, omega;

  cplx gamma(double nu) const { return gamma_hat(*J, cplx(nu, 0.0)); }

  // nu * Ghat(nu), stable down to nu = 0 for omega = 0 as well.
  cplx nuG(double nu) const {
    const cplx g = gamma(nu);
    if (omega == 0.0) return -1.0 / (cplx(nu, 0.0) + cplx(0.0, 1.0) * g / m);
    return nu / (cplx(omega * omega - nu * nu, 0.0) - cplx(0.0, nu) * g / m);
  }

  cplx ghat(double nu) const {
    if (nu == 0.0) {
      if (omega == 0.0)
        throw std::domain_error("Ghat diverges at nu = 0 when omega = 0");
      return cplx(1.0 / (omega * omega), 0.0);
    }
    return nuG(nu) / nu;
  }
};

}  // namespace

GreenFunction::GreenFunction(const SpectralDensity& J, double m, double omega,
                             double t_max, int nt, int nu_panels)
    : J_(J), m_(m), omega_(omega) {
  if (!(m > 0.0)) throw std::invalid_argument("GreenFunction: m must be > 0");
  if (!(omega >= 0.0)) throw std::invalid_argument("GreenFunction: omega must be >= 0");
  if (!(t_max > 0.0)) throw std::invalid_argument("GreenFunction: t_max must be > 0");
  if (nt < 8) throw std::invalid_argument("GreenFunction: nt must be >= 8");
  if (nu_panels < 64 || nu_panels % 2 != 0)
    throw std::invalid_argument("GreenFunction: nu_panels must be even and >= 64");
  J_.check_admissible();
  if (omega > 0.0 && !(J_(omega) > 0.0))
    throw AssumptionViolation(
        "spectral density vanishes at the resonance frequency; the response "
        "would be undamped there");

  L_ = J_.limit_L();
  kernel0_ = J_.kernel0();
  a_ = omega * omega + kernel0_ / m;
  b_ = kPi * L_ / m;
  nu_max_ = std::max({J_.nu_cutoff(), 25.0 * omega, 25.0 * kernel0_ / m, 50.0});
  plateau_ = (omega == 0.0) ? m / (kPi * J_(0.0)) : 0.0;

  // Resolve a narrow resonance: panel width at most a sixth of the
  // half-width pi J(omega) / (2m).
  int N = nu_panels;
  if (omega > 0.0) {
    const double half_width = kPi * J_(omega) / (2.0 * m);
    const double needed = 6.0 * nu_max_ / half_width;
    // clamp in floating point: the cast alone can overflow for a razor-thin
    // resonance, and past the cap the resolution is what it is
    if (needed > N)
      N = (needed >= static_cast<double>(1 << 21)) ? (1 << 21)
                                                   : static_cast<int>(needed) + 1;
    if (N % 2 != 0) ++N;
  }
  const double h = nu_max_ / N;

  const GhatContext ctx{&J_, m, omega};
  std::vector<double> fGc(N + 1), fGs(N + 1), fDc(N + 1), fDs(N + 1),
      fDDc(N + 1), fDDs(N + 1);
  const double J00 = J_(0.0);
  for (int i = 0; i <= N; ++i) {
    const double nu = i * h;
    const cplx g = ctx.gamma(nu);
    cplx nuG;
    if (omega == 0.0)
      nuG = -1.0 / (cplx(nu, 0.0) + cplx(0.0, 1.0) * g / m);
    else
      nuG = nu / (cplx(omega * omega - nu * nu, 0.0) - cplx(0.0, nu) * g / m);
    if (omega == 0.0) {
      // decaying part Ghat - i G_inf / nu in the cancellation-free form
      const double nu_eff = std::max(nu, 1e-9 * nu_max_);
      const cplx g_eff = (nu == 0.0) ? ctx.gamma(nu_eff) : g;
      const cplx num(kPi * (J00 - J_(nu_eff)), m * nu_eff - g_eff.imag());
      const cplx den = (cplx(m * nu_eff, 0.0) + cplx(0.0, 1.0) * g_eff) * kPi * J00;
      const cplx dec = (-m / nu_eff) * num / den;
      fGc[i] = dec.real();
      fGs[i] = dec.imag();
    } else {
      const cplx G = (nu == 0.0) ? cplx(1.0 / (omega * omega), 0.0) : nuG / nu;
      fGc[i] = G.real();
      fGs[i] = G.imag();
    }
    // Gdot: invert -i nu Ghat -> cos part nu Im Ghat, sin part -nu Re Ghat
    fDc[i] = nuG.imag();
    fDs[i] = -nuG.real();
    // Gddot: invert -nu^2 Ghat - 1
    fDDc[i] = -nu * nuG.real() - 1.0;
    fDDs[i] = -nu * nuG.imag();
  }

  const double dt = t_max / nt;
  t_.resize(nt + 1);
  G_.resize(nt + 1);
  Gdot_.resize(nt + 1);
  Gddot_.resize(nt + 1);
  t_[0] = 0.0;
  G_[0] = 0.0;      // exact one-sided limits of the causal response
  Gdot_[0] = 1.0;
  Gddot_[0] = 0.0;

  const std::vector<FilonJob> jobs = {{&fGc, false}, {&fGs, true},
                                      {&fDc, false}, {&fDs, true},
                                      {&fDDc, false}, {&fDDs, true}};
  std::vector<double> parts;
  const double x = nu_max_;
  for (int k = 1; k <= nt; ++k) {
    const double t = k * dt;
    t_[k] = t;
    filon_fused(jobs, h, t, &parts);
    double tail_G = -tail_cos(2, x, t) - a_ * tail_cos(4, x, t) +
                    b_ * tail_sin(5, x, t);
    if (omega == 0.0) tail_G -= plateau_ * tail_sin(1, x, t);
    const double tail_D =
        tail_sin(1, x, t) + a_ * tail_sin(3, x, t) + b_ * tail_cos(4, x, t);
    const double tail_DD = a_ * tail_cos(2, x, t) - b_ * tail_sin(3, x, t);
    G_[k] = (parts[0] + parts[1] + tail_G) / kPi + (omega == 0.0 ? plateau_ : 0.0);
    Gdot_[k] = (parts[2] + parts[3] + tail_D) / kPi;
    Gddot_[k] = (parts[4] + parts[5] + tail_DD) / kPi;
  }

  // Decay-rate estimate: least-squares slope of log |G - plateau| over the
  // last decade of the grid, preferring envelope maxima when enough exist.
  const double base = (omega == 0.0) ? plateau_ : 0.0;
  const int k_lo = nt / 10;
  std::vector<double> ts, ls;
  for (int k = std::max(1, k_lo); k + 1 <= nt; ++k) {
    const double d0 = std::abs(G_[k - 1] - base);
    const double d1 = std::abs(G_[k] - base);
    const double d2 = std::abs(G_[k + 1] - base);
    if (d1 >= d0 && d1 >= d2 && d1 > 0.0) {
      ts.push_back(t_[k]);
      ls.push_back(std::log(d1));
    }
  }
  if (ts.size() < 3) {
    ts.clear();
    ls.clear();
    double dmax = 0.0;
    for (int k = std::max(1, k_lo); k <= nt; ++k)
      dmax = std::max(dmax, std::abs(G_[k] - base));
    for (int k = std::max(1, k_lo); k <= nt; ++k) {
      const double d = std::abs(G_[k] - base);
      if (d > 1e-15 * std::max(1.0, dmax)) {
        ts.push_back(t_[k]);
        ls.push_back(std::log(d));
      }
    }
  }
  if (ts.size() >= 2) {
    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      st += ts[i];
      sl += ls[i];
      stt += ts[i] * ts[i];
      stl += ts[i] * ls[i];
    }
    const double nn = static_cast<double>(ts.size());
    const double denom = nn * stt - st * st;
    if (denom > 0.0) {
      const double slope = (nn * stl - st * sl) / denom;
      eta_ = std::max(-slope, 1e-8);
    } else {
      eta_ = 1e-8;
    }
  } else {
    eta_ = 1e-8;
  }
}

cplx GreenFunction::Ghat(double nu) const {
  const GhatContext ctx{&J_, m_, omega_};
  return ctx.ghat(nu);
}

double GreenFunction::interp(const std::vector<double>& y, double t) const {
  if (t < 0.0) return 0.0;
  const double dt = t_[1] - t_[0];
  const double f = t / dt;
  const auto k = static_cast<std::size_t>(f);
  if (f > static_cast<double>(t_.size() - 1) + 1e-9)
    throw std::out_of_range("GreenFunction: t beyond stored horizon");
  if (k + 1 >= t_.size()) return y.back();
  const double s = f - static_cast<double>(k);
  return (1.0 - s) * y[k] + s * y[k + 1];
}

double GreenFunction::G(double t) const { return interp(G_, t); }
double GreenFunction::Gdot(double t) const {
  if (t < 0.0) return 0.0;
  return interp(Gdot_, t);
}
double GreenFunction::Gddot(double t) const {
  if (t < 0.0) return 0.0;
  return interp(Gddot_, t);
}

GreenFunction green(const SpectralDensity& J, double m, double omega,
                    double t_max, int nt, int nu_panels) {
  return GreenFunction(J, m, omega, t_max, nt, nu_panels);
}

// ---------------------------------------------------------------------------
// Phi_beta
// ---------------------------------------------------------------------------

double BathCorrelation::integral() const {
  if (t.size() < 2) return 0.0;
  const double d = dt();
  // first stored sample is the average over [0, d/2]; midpoint cells after
  double sum = values[0] * 0.5 * d;
  for (std::size_t i = 1; i < values.size(); ++i) sum += values[i] * d;
  return 2.0 * sum;
}

BathCorrelation phi_beta(const SpectralDensity& J, double beta, double hbar,
                         double t_max, int nt) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("phi_beta: beta must be positive and finite");
  if (!(hbar > 0.0)) throw std::invalid_argument("phi_beta: hbar must be > 0");
  if (!(t_max > 0.0) || nt < 8)
    throw std::invalid_argument("phi_beta: need t_max > 0 and nt >= 8");
  J.check_admissible();
  const double L = J.limit_L();
  auto integrand = [&](double nu) {
    return (nu == 0.0) ? 2.0 * J(0.0) / beta
                       : hbar * J(nu) * nu * coth(0.5 * beta * hbar * nu);
  };
  // Uniform leg over the spectral support.  The coth crossover at
  // nu ~ 2/(beta hbar) can sit far beyond it (it recedes to infinity in the
  // classical limit), so the stretch in between is covered by geometrically
  // widening oscillatory panels: the amplitude there varies on the scale of
  // nu itself, which keeps a fixed panel count per octave accurate.
  const double nu_spec = std::max(J.nu_cutoff(), 50.0);
  const double nu_far = std::max(nu_spec, 20.0 / (beta * hbar));
  const int N = 8192;
  const double h = nu_spec / N;
  std::vector<double> f(N + 1);
  for (int i = 0; i <= N; ++i) f[i] = integrand(i * h);
  BathCorrelation out;
  out.beta = beta;
  out.hbar = hbar;
  out.L = L;
  const double dt = t_max / nt;
  out.t.resize(nt + 1);
  out.values.resize(nt + 1);
  constexpr int kOctavePanels = 256;
  auto phi_at = [&](double t) {
    double val = filon_cos(f, 0.0, h, t);
    double lo = nu_spec;
    std::vector<double> seg(kOctavePanels + 1);
    while (lo < nu_far * (1.0 - 1e-12)) {
      const double hi = std::min(2.0 * lo, nu_far);
      const double hs = (hi - lo) / kOctavePanels;
      for (int i = 0; i <= kOctavePanels; ++i) seg[i] = integrand(lo + i * hs);
      val += filon_cos(seg, lo, hs, t);
      lo = hi;
    }
    if (L > 0.0) val -= hbar * L * cosine_integral(nu_far * t);
    return val;
  };
  for (int k = 1; k <= nt; ++k) {
    out.t[k] = k * dt;
    out.values[k] = phi_at(out.t[k]);
  }
  out.t[0] = 0.0;
  if (L == 0.0) {
    out.values[0] = simpson_uniform(f, h);
  } else {
    // cell average over [0, dt/2] of Phi(t) = S(t) - hbar L ln t with the
    // smooth part S extracted at a tiny offset
    const double delta = 1e-6;
    const double A = phi_at(delta) + hbar * L * std::log(delta);
    out.values[0] = A - hbar * L * (std::log(0.5 * dt) - 1.0);
  }
  return out;
}

double phi_beta_finite_n(const BathSpec& spec, double beta, double hbar, double t) {
  spec.validate();
  double sum = 0.0;
  for (int j = 0; j < spec.n; ++j) {
    const double wj = spec.frequencies[j];
    sum += spec.masses[j] * wj * wj * std::cos(wj * t) /
           beta_eff(hbar * wj, beta);
  }
  return sum;
}

double beta_eff(double E, double beta) {
  if (!(E >= 0.0)) throw std::invalid_argument("beta_eff: E must be >= 0");
  if (!(beta > 0.0)) throw std::invalid_argument("beta_eff: beta must be > 0");
  const double x = 0.5 * beta * E;
  if (x < 1e-4) return beta * (1.0 - x * x / 3.0 + 2.0 * x * x * x * x / 15.0);
  return 2.0 / E * std::tanh(x);
}

// ---------------------------------------------------------------------------
// Thermal values
// ---------------------------------------------------------------------------

namespace {

// The resonance peak can be much narrower than the integration range; split
// at [omega/2, 3*omega/2] so the first bisection midpoint lands exactly on it.
template <typename F>
double integrate_with_resonance(const F& f, double omega, double nu_max) {
  if (omega > 0.0 && 1.5 * omega < nu_max) {
    return adaptive_simpson(f, 0.0, 0.5 * omega, 1e-9, 1e-13) +
           adaptive_simpson(f, 0.5 * omega, 1.5 * omega, 1e-9, 1e-13) +
           adaptive_simpson(f, 1.5 * omega, nu_max, 1e-9, 1e-13);
  }
  return adaptive_simpson(f, 0.0, nu_max, 1e-9, 1e-13);
}

}  // namespace

ThermalValues thermal_values(const SpectralDensity& J, double m, double omega,
                             double beta, double hbar, ThermalMethod method,
                             bool include_q2) {
  if (!(m > 0.0)) throw std::invalid_argument("thermal_values: m must be > 0");
  if (!(omega >= 0.0)) throw std::invalid_argument("thermal_values: omega must be >= 0");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("thermal_values: beta must be positive and finite");
  if (!(hbar > 0.0)) throw std::invalid_argument("thermal_values: hbar must be > 0");
  if (omega == 0.0 && include_q2)
    throw std::invalid_argument(
        "thermal_values: q2 has no equilibrium value at omega = 0");
  J.check_admissible();
  const double L = J.limit_L();
  const double kernel0 = J.kernel0();
  const double nu_max = std::max(
      {J.nu_cutoff(), 25.0 * std::max(omega, kernel0 / m), 20.0 / (beta * hbar), 50.0});
  const GhatContext ctx{&J, m, omega};
  const double Ginf = (omega == 0.0) ? m / (kPi * J(0.0)) : 0.0;

  ThermalValues out;
  out.q2 = std::numeric_limits<double>::quiet_NaN();

  switch (method) {
    case ThermalMethod::kSpectralIntegral: {
      auto fp = [&](double nu) {
        if (nu == 0.0)
          return (omega == 0.0) ? 2.0 * J(0.0) * Ginf * Ginf / beta : 0.0;
        const double n2 = std::norm(ctx.nuG(nu));
        return hbar * J(nu) * nu * n2 * coth(0.5 * beta * hbar * nu);
      };
      out.p2 = integrate_with_resonance(fp, omega, nu_max) +
               hbar * L / (2.0 * nu_max * nu_max);
      if (include_q2) {
        auto fq = [&](double nu) {
          if (nu == 0.0)
            return 2.0 * J(0.0) / (m * m * beta * std::pow(omega, 4));
          const double n2 = std::norm(ctx.nuG(nu));
          return hbar / (m * m) * J(nu) * (n2 / nu) *
                 coth(0.5 * beta * hbar * nu);
        };
        out.q2 = integrate_with_resonance(fq, omega, nu_max) +
                 hbar * L / (4.0 * m * m * std::pow(nu_max, 4));
      }
      break;
    }
    case ThermalMethod::kPvIntegral: {
      auto fp = [&](double nu) {
        if (nu == 0.0)
          return (omega == 0.0) ? 2.0 * Ginf / (beta * hbar) : 0.0;
        // nu^2 Im Ghat = nu * Im(nu Ghat)
        return nu * ctx.nuG(nu).imag() * coth(0.5 * beta * hbar * nu);
      };
      out.p2 = (m * hbar / kPi) * integrate_with_resonance(fp, omega, nu_max) +
               hbar * L / (2.0 * nu_max * nu_max);
      if (include_q2) {
        auto fq = [&](double nu) {
          if (nu == 0.0)
            return 2.0 * kPi * J(0.0) / (m * beta * hbar * std::pow(omega, 4));
          return ctx.nuG(nu).imag() / nu * coth(0.5 * beta * hbar * nu);
        };
        out.q2 =
            (hbar / (kPi * m)) * integrate_with_resonance(fq, omega, nu_max) +
            hbar * L / (4.0 * m * m * std::pow(nu_max, 4));
      }
      break;
    }
    case ThermalMethod::kMatsubara: {
      const double nu_beta = 2.0 * kPi / (beta * hbar);
      const double wj2 = omega * omega + kernel0 / m;
      const double Ap = wj2 / (nu_beta * nu_beta);
      const double Aq = 1.0 / (nu_beta * nu_beta);
      double Sp = 0.0, Sq = 0.0;
      double rp = 0.0, rq = 0.0;
      long l = 0;
      const long l_cap = 1L << 22;
      bool converged = false;
      while (!converged && l < l_cap) {
        for (int step = 0; step < 256; ++step) {
          ++l;
          const double nl = nu_beta * static_cast<double>(l);
          const double g = gamma_hat(J, cplx(0.0, nl)).real();
          const double friction = nl * g / m;
          const double gE = 1.0 / (omega * omega + nl * nl + friction);
          const double sl = (omega * omega + friction) * gE;
          const double ll = static_cast<double>(l);
          rp = sl - Ap / (ll * ll);
          rq = gE - Aq / (ll * ll);
          Sp += rp;
          Sq += rq;
        }
        const double scale_p = std::abs(Sp) + kPi * kPi / 6.0 * Ap + 1.0;
        const double scale_q = std::abs(Sq) + kPi * kPi / 6.0 * Aq + 1e-30;
        converged = (std::abs(rp) * l / 2.0 < 1e-8 * scale_p) &&
                    (!include_q2 || std::abs(rq) * l / 2.0 < 1e-8 * scale_q);
      }
      // residuals decay like 1/l^3: tail estimate r_L * L / 2
      Sp += rp * static_cast<double>(l) / 2.0;
      Sq += rq * static_cast<double>(l) / 2.0;
      Sp += Ap * kPi * kPi / 6.0;
      Sq += Aq * kPi * kPi / 6.0;
      out.p2 = (m / beta) * (1.0 + 2.0 * Sp);
      if (include_q2)
        out.q2 = 1.0 / (m * beta) * (1.0 / (omega * omega) + 2.0 * Sq);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reduced moments
// ---------------------------------------------------------------------------

ReducedMoments reduced_moments(const SpectralDensity& J, double curv, double m,
                               double omega, double beta, double hbar,
                               const std::vector<double>& times,
                               const InitialSecondMoments& initial, int grid_n,
                               int nu_panels) {
  if (times.empty()) throw std::invalid_argument("reduced_moments: no times given");
  for (double t : times)
    if (!(t >= 0.0)) throw std::invalid_argument("reduced_moments: times must be >= 0");
  if (!(curv >= 0.0))
    throw std::invalid_argument("reduced_moments: curvature must be >= 0");
  if (grid_n < 64) throw std::invalid_argument("reduced_moments: grid_n too small");
  const double t_req = *std::max_element(times.begin(), times.end());
  const double t_max = std::max(t_req, 1e-6) * (1.0 + 1e-12);

  const int N = grid_n;
  const GreenFunction gf(J, m, omega, t_max, N, nu_panels);
  const BathCorrelation phi = phi_beta(J, beta, hbar, t_max, N);
  const double dt = t_max / N;

  const std::vector<double>& G = gf.G_samples();
  const std::vector<double>& Gd = gf.Gdot_samples();
  const std::vector<double>& Gdd = gf.Gddot_samples();

  auto force_terms = [&](const std::vector<double>& u) {
    // w(a) = int_0^a Phi(a-b) u(b) db  (trapezoid via FFT convolution)
    std::vector<double> conv = convolve(phi.values, u);
    std::vector<double> integrand(N + 1);
    for (int i = 0; i <= N; ++i) {
      const double w =
          dt * (conv[i] - 0.5 * phi.values[i] * u[0] - 0.5 * phi.values[0] * u[i]);
      integrand[i] = u[i] * w;
    }
    std::vector<double> iphi = cumulative_integral(integrand, dt);
    std::vector<double> u2(N + 1);
    for (int i = 0; i <= N; ++i) u2[i] = u[i] * u[i];
    std::vector<double> white = cumulative_integral(u2, dt);
    for (int i = 0; i <= N; ++i) iphi[i] = 2.0 * iphi[i] + curv * white[i];
    return iphi;
  };

  std::vector<double> up(N + 1), uq(N + 1);
  for (int i = 0; i <= N; ++i) {
    up[i] = Gd[i];
    uq[i] = G[i] / m;
  }
  const std::vector<double> add_p = force_terms(up);
  const std::vector<double> add_q = force_terms(uq);

  std::vector<double> p2g(N + 1), q2g(N + 1), pmg(N + 1), qmg(N + 1);
  for (int i = 0; i <= N; ++i) {
    const double gd = Gd[i], gdd = Gdd[i], g_m = G[i] / m;
    p2g[i] = gd * gd * initial.p2 + 2.0 * m * gd * gdd * initial.pq +
             m * m * gdd * gdd * initial.q2 + add_p[i];
    q2g[i] = g_m * g_m * initial.p2 + 2.0 * g_m * gd * initial.pq +
             gd * gd * initial.q2 + add_q[i];
    pmg[i] = gd * initial.p_mean + m * gdd * initial.q_mean;
    qmg[i] = g_m * initial.p_mean + gd * initial.q_mean;
  }

  auto interp = [&](const std::vector<double>& y, double t) {
    const double f = t / dt;
    auto k = static_cast<std::size_t>(f);
    if (k + 1 > static_cast<std::size_t>(N)) return y[N];
    const double s = f - static_cast<double>(k);
    return (1.0 - s) * y[k] + s * y[k + 1];
  };

  ReducedMoments out;
  out.times = times;
  for (double t : times) {
    out.p2.push_back(interp(p2g, t));
    out.q2.push_back(interp(q2g, t));
    out.p_mean.push_back(interp(pmg, t));
    out.q_mean.push_back(interp(qmg, t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Long-time limits
// ---------------------------------------------------------------------------

LongtimeLimits longtime_limits(const SpectralDensity& J, double curv, double m,
                               double omega, double beta, double hbar) {
  if (!(curv >= 0.0))
    throw std::invalid_argument("longtime_limits: curvature must be >= 0");
  J.check_admissible();
  const double kernel0 = J.kernel0();
  const double nu_max =
      std::max({J.nu_cutoff(), 25.0 * std::max(omega, kernel0 / m), 50.0});
  const GhatContext ctx{&J, m, omega};
  const double Ginf = (omega == 0.0) ? m / (kPi * J(0.0)) : 0.0;

  // (1/pi) int_0^inf nu^2 |Ghat|^2 = int_0^inf Gdot^2 (Parseval)
  auto fp = [&](double nu) {
    if (nu == 0.0) return (omega == 0.0) ? Ginf * Ginf : 0.0;
    return std::norm(ctx.nuG(nu));
  };
  const double Ipar_p =
      (integrate_with_resonance(fp, omega, nu_max) + 1.0 / nu_max) / kPi;

  LongtimeLimits out;
  const ThermalValues th = thermal_values(J, m, omega, beta, hbar,
                                          ThermalMethod::kMatsubara, omega > 0.0);
  out.p2_limit = th.p2 + curv * Ipar_p;
  if (omega > 0.0) {
    auto fq = [&](double nu) {
      if (nu == 0.0) return 1.0 / std::pow(omega, 4);
      return std::norm(ctx.nuG(nu)) / (nu * nu);
    };
    const double Ipar_q =
        (integrate_with_resonance(fq, omega, nu_max) +
         1.0 / (3.0 * std::pow(nu_max, 3))) /
        kPi;
    out.q2_limit = th.q2 + curv / (m * m) * Ipar_q;
    out.diffusion_constant = 0.0;
    out.diffusive = false;
  } else {
    out.q2_limit = std::numeric_limits<double>::quiet_NaN();
    const double J00 = J(0.0);
    out.diffusion_constant =
        (2.0 / (kPi * J00)) * (1.0 / beta + curv / (2.0 * kPi * J00));
    out.diffusive = true;
  }
  return out;
}

}  // namespace wndyn
