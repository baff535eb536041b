#include "wndyn/averaged_semigroup.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "wndyn/errors.hpp"
#include "wndyn/fft_utils.hpp"
#include "wndyn/quadrature.hpp"

namespace wndyn {

// ---------------------------------------------------------------------------
// WignerGrid
// ---------------------------------------------------------------------------

double WignerGrid::mass() const { return w.sum() * dp * dq; }

double WignerGrid::inner() const { return w.array().square().sum() * dp * dq; }

double WignerGrid::moment(int a, int b) const {
  if (a < 0 || b < 0) throw std::invalid_argument("WignerGrid::moment: bad order");
  double sum = 0.0;
  for (int i = 0; i < np; ++i) {
    const double pa = std::pow(p_at(i), a);
    for (int j = 0; j < nq; ++j) sum += pa * std::pow(q_at(j), b) * w(i, j);
  }
  return sum * dp * dq;
}

Eigen::Vector2d WignerGrid::mean_vector() const {
  return {moment(1, 0), moment(0, 1)};
}

Eigen::Matrix2d WignerGrid::second_moment_matrix() const {
  Eigen::Matrix2d M;
  const double pq = moment(1, 1);
  M << moment(2, 0), pq, pq, moment(0, 2);
  return M;
}

WignerGrid WignerGrid::zeros(int np, int nq, double pmax, double qmax, double hbar) {
  if (np < 2 || nq < 2) throw std::invalid_argument("WignerGrid: need >= 2 points");
  if (!(pmax > 0.0) || !(qmax > 0.0))
    throw std::invalid_argument("WignerGrid: extents must be positive");
  WignerGrid g;
  g.np = np;
  g.nq = nq;
  g.dp = 2.0 * pmax / np;
  g.dq = 2.0 * qmax / nq;
  g.p0 = -pmax;
  g.q0 = -qmax;
  g.hbar = hbar;
  g.w = Eigen::MatrixXd::Zero(np, nq);
  return g;
}

WignerGrid WignerGrid::gaussian_state(int np, int nq, double pmax, double qmax,
                                      double hbar, const Eigen::Vector2d& mean,
                                      const Eigen::Matrix2d& cov, bool classical) {
  WignerGrid g = zeros(np, nq, pmax, qmax, hbar);
  g.classical = classical;
  const double det = cov.determinant();
  if (!(det > 0.0))
    throw std::invalid_argument("gaussian_state: covariance must be positive definite");
  const Eigen::Matrix2d prec = cov.inverse();
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < nq; ++j) {
      Eigen::Vector2d r(g.p_at(i) - mean(0), g.q_at(j) - mean(1));
      g.w(i, j) = norm * std::exp(-0.5 * r.dot(prec * r));
    }
  }
  return g;
}

void save_wigner_grid(const WignerGrid& g, const std::string& csv_path,
                      const std::string& sidecar_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("save_wigner_grid: cannot open " + csv_path);
  csv << "p,q,w\n";
  char buf[96];
  for (int i = 0; i < g.np; ++i) {
    for (int j = 0; j < g.nq; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", g.p_at(i), g.q_at(j),
                    g.w(i, j));
      csv << buf;
    }
  }
  nlohmann::json side;
  side["np"] = g.np;
  side["nq"] = g.nq;
  side["p0"] = g.p0;
  side["q0"] = g.q0;
  side["dp"] = g.dp;
  side["dq"] = g.dq;
  side["hbar"] = g.hbar;
  side["classical"] = g.classical;
  std::ofstream sc(sidecar_path);
  if (!sc) throw std::runtime_error("save_wigner_grid: cannot open " + sidecar_path);
  sc << side.dump(2) << "\n";
}

WignerGrid load_wigner_grid(const std::string& csv_path,
                            const std::string& sidecar_path) {
  std::ifstream sc(sidecar_path);
  if (!sc) throw std::runtime_error("load_wigner_grid: cannot open " + sidecar_path);
  nlohmann::json side = nlohmann::json::parse(sc);
  WignerGrid g;
  g.np = side.at("np").get<int>();
  g.nq = side.at("nq").get<int>();
  g.p0 = side.at("p0").get<double>();
  g.q0 = side.at("q0").get<double>();
  g.dp = side.at("dp").get<double>();
  g.dq = side.at("dq").get<double>();
  g.hbar = side.at("hbar").get<double>();
  g.classical = side.value("classical", false);
  g.w = Eigen::MatrixXd::Zero(g.np, g.nq);
  std::ifstream csv(csv_path);
  if (!csv) throw std::runtime_error("load_wigner_grid: cannot open " + csv_path);
  std::string line;
  long long row = 0;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'p') continue;
    std::istringstream ss(line);
    std::string tok;
    double vals[3] = {0, 0, 0};
    for (int c = 0; c < 3 && std::getline(ss, tok, ','); ++c) vals[c] = std::stod(tok);
    const long long i = row / g.nq;
    const long long j = row % g.nq;
    if (i >= g.np) throw std::runtime_error("load_wigner_grid: too many rows");
    g.w(i, j) = vals[2];
    ++row;
  }
  if (row != static_cast<long long>(g.np) * g.nq)
    throw std::runtime_error("load_wigner_grid: row count does not match sidecar");
  return g;
}

// ---------------------------------------------------------------------------
// Flow classification (closed forms for free and harmonic H)
// ---------------------------------------------------------------------------

namespace {

struct HKind {
  enum Kind { kFree, kHarmonic, kGeneral } kind = kGeneral;
  double m = 0.0;
  double omega = 0.0;
};

HKind classify(const QuadraticHamiltonian& H) {
  HKind out;
  if (H.dim != 1) return out;
  const double a = H.A(0, 0), b = H.A(0, 1), c = H.A(1, 1);
  if (b == 0.0 && a > 0.0) {
    if (c == 0.0) {
      out.kind = HKind::kFree;
      out.m = 1.0 / a;
    } else if (c > 0.0) {
      out.kind = HKind::kHarmonic;
      out.m = 1.0 / a;
      out.omega = std::sqrt(a * c);
    }
  }
  return out;
}

Eigen::Vector2d flow_apply(const HKind& k, const QuadraticHamiltonian& H, double s,
                           double p, double q) {
  switch (k.kind) {
    case HKind::kFree:
      return {p, q + s * p / k.m};
    case HKind::kHarmonic: {
      const double c = std::cos(k.omega * s), sn = std::sin(k.omega * s);
      const double r = k.m * k.omega;
      return {c * p - r * sn * q, sn / r * p + c * q};
    }
    case HKind::kGeneral: {
      const Eigen::MatrixXd J = flow_jacobian(H, s).J;
      Eigen::Vector2d z(p, q);
      return J * z;
    }
  }
  return {p, q};
}

}  // namespace

// ---------------------------------------------------------------------------
// Smearing covariance
// ---------------------------------------------------------------------------

SmearingCovariance smearing_covariance(const QuadraticHamiltonian& H,
                                       const DiffusionMatrix& D, double t,
                                       Direction direction) {
  if (H.dim != 1)
    throw std::invalid_argument("smearing_covariance: requires dim == 1");
  if (t < 0.0) throw std::invalid_argument("smearing_covariance: t must be >= 0");
  SmearingCovariance out;
  out.t = t;
  out.direction = direction;
  if (t == 0.0) return out;

  const double sg = (direction == Direction::kObservable) ? 1.0 : -1.0;
  const double d1 = D.d02(), e = 0.5 * D.d11(), d2 = D.d20();
  const HKind k = classify(H);
  Eigen::Matrix2d C;
  switch (k.kind) {
    case HKind::kFree: {
      const double m = k.m;
      const double pp = 2.0 * t * d1;
      const double pq = sg * t * t * d1 / m + 2.0 * t * e;
      const double qq = (2.0 / 3.0) * t * t * t * d1 / (m * m) +
                        sg * 2.0 * t * t * e / m + 2.0 * t * d2;
      C << pp, pq, pq, qq;
      break;
    }
    case HKind::kHarmonic: {
      const double om = k.omega, r = k.m * k.omega;
      const double icc = 0.5 * t + std::sin(2.0 * om * t) / (4.0 * om);
      const double iss = 0.5 * t - std::sin(2.0 * om * t) / (4.0 * om);
      const double ics = sg * (1.0 - std::cos(2.0 * om * t)) / (4.0 * om);
      const double pp = 2.0 * (icc * d1 - 2.0 * r * ics * e + r * r * iss * d2);
      const double pq =
          2.0 * (ics / r * d1 + (icc - iss) * e - r * ics * d2);
      const double qq = 2.0 * (iss / (r * r) * d1 + 2.0 * ics / r * e + icc * d2);
      C << pp, pq, pq, qq;
      break;
    }
    case HKind::kGeneral: {
      auto integrand = [&](double s) -> Eigen::MatrixXd {
        const Eigen::MatrixXd J = flow_jacobian(H, sg * s).J;
        return 2.0 * J * D.D * J.transpose();
      };
      const double scale = std::max(1.0, D.D.cwiseAbs().maxCoeff());
      C = adaptive_simpson_matrix(integrand, 0.0, t, 1e-10, 1e-14 * scale * t);
      break;
    }
  }
  out.C_t = 0.5 * (C + C.transpose());
  return out;
}

// ---------------------------------------------------------------------------
// CharacteristicFn
// ---------------------------------------------------------------------------

CharacteristicFn::CharacteristicFn(const QuadraticHamiltonian& H,
                                   const CovarianceSpec& spec, double t, double hbar)
    : H_(H), spec_(spec), t_(t), hbar_(hbar), c00_(spec.c00()) {
  if (H.dim != 1) throw std::invalid_argument("CharacteristicFn: requires dim == 1");
  if (t < 0.0) throw std::invalid_argument("CharacteristicFn: t must be >= 0");
  if (!(hbar > 0.0)) throw std::invalid_argument("CharacteristicFn: hbar must be > 0");
}

double CharacteristicFn::log_p_tilde(double p, double q) const {
  if (t_ == 0.0 || spec_.family == CovarianceFamily::kConstant) return 0.0;
  const HKind k = classify(H_);
  auto f = [&](double s) {
    const Eigen::Vector2d zs = flow_apply(k, H_, s, p, q);
    return eval_C(spec_, zs(0), zs(1)) - c00_;
  };
  const double floor = 1e-13 * t_ * std::max(1.0, c00_);
  const double integral = adaptive_simpson(f, 0.0, t_, 1e-8, floor);
  return std::min(0.0, integral) / (hbar_ * hbar_);
}

double CharacteristicFn::p_tilde(double p, double q) const {
  return std::exp(log_p_tilde(p, q));
}

double CharacteristicFn::q_tilde(double p, double q) const {
  return p_tilde(p, q) - point_mass();
}

double CharacteristicFn::point_mass_log() const {
  return -t_ * c00_ / (hbar_ * hbar_);
}

double CharacteristicFn::point_mass() const { return std::exp(point_mass_log()); }

double CharacteristicFn::q_mass() const { return -std::expm1(point_mass_log()); }

CharacteristicFn characteristic_fn(const QuadraticHamiltonian& H,
                                   const CovarianceSpec& spec, double t,
                                   double hbar) {
  return CharacteristicFn(H, spec, t, hbar);
}

// ---------------------------------------------------------------------------
// Grid evolution
// ---------------------------------------------------------------------------

namespace {

bool near_integer(double x, double tol, long long* out) {
  const double r = std::round(x);
  if (std::abs(x - r) <= tol) {
    *out = static_cast<long long>(r);
    return true;
  }
  return false;
}

// out(i,j) = values at x = B z_ij, zero outside the grid.  Uses an exact
// integer gather when B maps the lattice onto itself, else bilinear
// interpolation on the sampled values.
Eigen::MatrixXd transport(const WignerGrid& g, const Eigen::MatrixXd& values,
                          const Eigen::Matrix2d& B) {
  // fractional index of the image point, affine in (i, j):
  //   fi = a0 + ai*i + aj*j,  fj = b0 + bi*i + bj*j
  const double a0 = (B(0, 0) * g.p0 + B(0, 1) * g.q0 - g.p0) / g.dp;
  const double ai = B(0, 0);
  const double aj = B(0, 1) * g.dq / g.dp;
  const double b0 = (B(1, 0) * g.p0 + B(1, 1) * g.q0 - g.q0) / g.dq;
  const double bi = B(1, 0) * g.dp / g.dq;
  const double bj = B(1, 1);

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.np, g.nq);

  long long ia0, iai, iaj, ib0, ibi, ibj;
  const double tol = 1e-9;
  if (near_integer(a0, tol, &ia0) && near_integer(ai, tol, &iai) &&
      near_integer(aj, tol, &iaj) && near_integer(b0, tol, &ib0) &&
      near_integer(bi, tol, &ibi) && near_integer(bj, tol, &ibj)) {
    for (int i = 0; i < g.np; ++i) {
      for (int j = 0; j < g.nq; ++j) {
        const long long ii = ia0 + iai * i + iaj * j;
        const long long jj = ib0 + ibi * i + ibj * j;
        if (ii >= 0 && ii < g.np && jj >= 0 && jj < g.nq)
          out(i, j) = values(ii, jj);
      }
    }
    return out;
  }

  for (int i = 0; i < g.np; ++i) {
    for (int j = 0; j < g.nq; ++j) {
      const double fi = a0 + ai * i + aj * j;
      const double fj = b0 + bi * i + bj * j;
      const double flo_i = std::floor(fi), flo_j = std::floor(fj);
      const int i1 = static_cast<int>(flo_i), j1 = static_cast<int>(flo_j);
      const double si = fi - flo_i, sj = fj - flo_j;
      double acc = 0.0;
      for (int di = 0; di <= 1; ++di) {
        for (int dj = 0; dj <= 1; ++dj) {
          const int ii = i1 + di, jj = j1 + dj;
          if (ii < 0 || ii >= g.np || jj < 0 || jj >= g.nq) continue;
          const double wgt = (di ? si : 1.0 - si) * (dj ? sj : 1.0 - sj);
          acc += wgt * values(ii, jj);
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

// Apply a frequency-space multiplier to the grid values.  mult(u, v) receives
// the angular frequencies conjugate to (p, q) under the standard transform.
template <typename Mult>
Eigen::MatrixXd apply_multiplier(const WignerGrid& g, Mult&& mult) {
  const std::size_t np = static_cast<std::size_t>(g.np);
  const std::size_t nq = static_cast<std::size_t>(g.nq);
  std::vector<cplx> buf(np * nq);
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = 0; j < nq; ++j) buf[i * nq + j] = g.w(i, j);
  fft_2d(buf, np, nq, false);
  for (std::size_t i = 0; i < np; ++i) {
    const double u = fft_frequency(i, np, g.dp);
    for (std::size_t j = 0; j < nq; ++j) {
      const double v = fft_frequency(j, nq, g.dq);
      buf[i * nq + j] *= mult(u, v);
    }
  }
  fft_2d(buf, np, nq, true);
  Eigen::MatrixXd out(g.np, g.nq);
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = 0; j < nq; ++j) out(i, j) = buf[i * nq + j].real();
  return out;
}

void check_mass(const WignerGrid& before, const WignerGrid& after) {
  const double m0 = before.mass();
  const double m1 = after.mass();
  const double tol = 1e-6 * std::max(1.0, std::abs(m0));
  if (std::abs(m1 - m0) > tol)
    throw SupportEscape("grid evolution lost mass: " + std::to_string(m0) + " -> " +
                        std::to_string(m1));
}

}  // namespace

WignerGrid evolve_wigner(const WignerGrid& w, const QuadraticHamiltonian& H,
                         const CovarianceSpec& spec, double t) {
  if (t < 0.0) throw std::invalid_argument("evolve_wigner: t must be >= 0");
  if (H.dim != 1) throw std::invalid_argument("evolve_wigner: requires dim == 1");
  if (H.hbar != w.hbar)
    throw std::invalid_argument("evolve_wigner: H and grid disagree on hbar");
  WignerGrid out = w;
  if (t == 0.0) return out;

  Eigen::MatrixXd smeared;
  if (spec.family == CovarianceFamily::kConstant) {
    smeared = w.w;  // constant C: pure transport
  } else {
    const CharacteristicFn cf(H, spec, t, w.hbar);
    const double hbar = w.hbar;
    smeared = apply_multiplier(w, [&](double u, double v) {
      return cf.p_tilde(-hbar * v, hbar * u);
    });
  }
  const Eigen::Matrix2d B = flow_jacobian(H, -t).J;
  out.w = transport(w, smeared, B);
  check_mass(w, out);
  return out;
}

WignerGrid classical_evolve(const WignerGrid& rho, const QuadraticHamiltonian& H,
                            const DiffusionMatrix& D, double t) {
  if (t < 0.0) throw std::invalid_argument("classical_evolve: t must be >= 0");
  if (H.dim != 1) throw std::invalid_argument("classical_evolve: requires dim == 1");
  WignerGrid out = rho;
  out.classical = true;
  if (t == 0.0) return out;

  Eigen::MatrixXd smeared;
  if (D.D.isZero(0.0)) {
    smeared = rho.w;
  } else {
    const Eigen::Matrix2d C = smearing_covariance(H, D, t, Direction::kState).C_t;
    smeared = apply_multiplier(rho, [&](double u, double v) {
      const double quad =
          C(0, 0) * u * u + 2.0 * C(0, 1) * u * v + C(1, 1) * v * v;
      return std::exp(-0.5 * quad);
    });
  }
  const Eigen::Matrix2d B = flow_jacobian(H, -t).J;
  out.w = transport(rho, smeared, B);
  check_mass(rho, out);
  return out;
}

// ---------------------------------------------------------------------------
// Moment propagation
// ---------------------------------------------------------------------------

MomentTable propagate_moments(const QuadraticHamiltonian& H,
                              const DiffusionMatrix& D,
                              const MomentState& initial, double t) {
  if (H.dim != 1) throw std::invalid_argument("propagate_moments: requires dim == 1");
  if (t < 0.0) throw std::invalid_argument("propagate_moments: t must be >= 0");
  MomentTable table;
  table.t = t;

  const Eigen::Matrix2d J = flow_jacobian(H, t).J;
  const Eigen::Vector2d mean = J * initial.mean;
  const Eigen::Matrix2d M =
      J * initial.second * J.transpose() +
      smearing_covariance(H, D, t, Direction::kObservable).C_t;

  table.values["p"] = mean(0);
  table.values["q"] = mean(1);
  table.values["p2"] = M(0, 0);
  table.values["pq"] = M(0, 1);
  table.values["q2"] = M(1, 1);
  table.values["H"] = 0.5 * (H.A * M).trace();

  // The mean energy is linear in t for every quadratic H: the transported
  // part is conserved and the noise part accumulates at a constant rate.
  const double rate =
      H.A(0, 0) * D.d02() + H.A(0, 1) * D.d11() + H.A(1, 1) * D.d20();
  const double h0 = 0.5 * (H.A * initial.second).trace();
  table.polynomials["H"] = {h0, rate};

  const HKind k = classify(H);
  if (k.kind == HKind::kFree) {
    const double m = k.m;
    const double mp = initial.mean(0), mq = initial.mean(1);
    const double Mpp = initial.second(0, 0), Mpq = initial.second(0, 1),
                 Mqq = initial.second(1, 1);
    table.polynomials["p"] = {mp};
    table.polynomials["q"] = {mq, mp / m};
    table.polynomials["p2"] = {Mpp, 2.0 * D.d02()};
    table.polynomials["pq"] = {Mpq, Mpp / m + D.d11(), D.d02() / m};
    table.polynomials["q2"] = {Mqq, 2.0 * Mpq / m + 2.0 * D.d20(),
                               Mpp / (m * m) + D.d11() / m,
                               (2.0 / 3.0) * D.d02() / (m * m)};
    table.polynomials["d2"] = {0.0, D.d20(), D.d11() / (2.0 * m),
                               D.d02() / (3.0 * m * m)};
  }
  return table;
}

CurvatureCoefficients CurvatureCoefficients::from_spec(const CovarianceSpec& spec) {
  CurvatureCoefficients c;
  c.d20 = curvature_moment(spec, 2, 0);
  c.d11 = curvature_moment(spec, 1, 1);
  c.d02 = curvature_moment(spec, 0, 2);
  c.d40 = curvature_moment(spec, 4, 0);
  c.d31 = curvature_moment(spec, 3, 1);
  c.d22 = curvature_moment(spec, 2, 2);
  c.d13 = curvature_moment(spec, 1, 3);
  c.d04 = curvature_moment(spec, 0, 4);
  return c;
}

double StateMoments::raw(int a, int b) const {
  if (a < 0 || b < 0 || a + b > 4)
    throw std::invalid_argument("StateMoments::raw: order out of range");
  return m[a][b];
}

StateMoments StateMoments::point(double p, double q) {
  StateMoments s;
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b)
      s.m[a][b] = std::pow(p, a) * std::pow(q, b);
  return s;
}

namespace {

// Gaussian raw-moment recursion (Stein's identity):
//   E[p^a q^b] = mu_p E[p^{a-1}q^b] + (a-1) S_pp E[p^{a-2}q^b]
//                + b S_pq E[p^{a-1}q^{b-1}]
double gauss_raw(int a, int b, const Eigen::Vector2d& mu, const Eigen::Matrix2d& S) {
  if (a < 0 || b < 0) return 0.0;
  if (a == 0 && b == 0) return 1.0;
  if (a > 0) {
    return mu(0) * gauss_raw(a - 1, b, mu, S) +
           (a - 1) * S(0, 0) * gauss_raw(a - 2, b, mu, S) +
           b * S(0, 1) * gauss_raw(a - 1, b - 1, mu, S);
  }
  return mu(1) * gauss_raw(0, b - 1, mu, S) +
         (b - 1) * S(1, 1) * gauss_raw(0, b - 2, mu, S);
}

}  // namespace

StateMoments StateMoments::gaussian(const Eigen::Vector2d& mean,
                                    const Eigen::Matrix2d& cov) {
  StateMoments s;
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b) s.m[a][b] = gauss_raw(a, b, mean, cov);
  return s;
}

double free_q4_moment(double m, const CurvatureCoefficients& D, double hbar,
                      const StateMoments& initial, double t) {
  if (!(m > 0.0)) throw std::invalid_argument("free_q4_moment: m must be > 0");
  const double tau = t / m;
  // X = q + (t/m) p transported observable
  double x2 = 0.0, x4 = 0.0;
  for (int kk = 0; kk <= 2; ++kk) {
    double binom = (kk == 1) ? 2.0 : 1.0;
    x2 += binom * std::pow(tau, kk) * initial.raw(kk, 2 - kk);
  }
  const double binom4[5] = {1.0, 4.0, 6.0, 4.0, 1.0};
  for (int kk = 0; kk <= 4; ++kk)
    x4 += binom4[kk] * std::pow(tau, kk) * initial.raw(kk, 4 - kk);

  const double d2 = D.d20 * t + D.d11 * t * t / (2.0 * m) +
                    D.d02 * t * t * t / (3.0 * m * m);
  const double d4 = D.d40 * t + D.d31 * t * t / (2.0 * m) +
                    D.d22 * t * t * t / (3.0 * m * m) +
                    D.d13 * std::pow(t, 4) / (4.0 * m * m * m) +
                    D.d04 * std::pow(t, 5) / (5.0 * std::pow(m, 4));
  return x4 + 12.0 * d2 * x2 + 24.0 * hbar * hbar * d4 + 12.0 * d2 * d2;
}

// ---------------------------------------------------------------------------
// Mixing diagnostics
// ---------------------------------------------------------------------------

double purity(const WignerGrid& w) {
  return 2.0 * std::numbers::pi * w.hbar * w.inner();
}

double renyi2_entropy(const WignerGrid& w) { return -std::log(purity(w)); }

double bg_entropy(const WignerGrid& rho) {
  const double scale = 2.0 * std::numbers::pi * rho.hbar;
  double sum = 0.0;
  for (int i = 0; i < rho.np; ++i) {
    for (int j = 0; j < rho.nq; ++j) {
      const double v = rho.w(i, j);
      if (v > 0.0) sum += v * std::log(scale * v);
    }
  }
  return -sum * rho.dp * rho.dq;
}

// ---------------------------------------------------------------------------
// Density of the decaying part of the smearing measure
// ---------------------------------------------------------------------------

WignerGrid q_density_grid(const CharacteristicFn& cf, int n, double zp_max,
                          double zq_max) {
  if (n < 8 || n % 2 != 0)
    throw std::invalid_argument("q_density_grid: n must be even and >= 8");
  if (!(zp_max > 0.0) || !(zq_max > 0.0))
    throw std::invalid_argument("q_density_grid: extents must be positive");
  const double hbar = cf.hbar();
  const std::size_t N = static_cast<std::size_t>(n);
  const double dzp = 2.0 * zp_max / n;
  const double dzq = 2.0 * zq_max / n;
  const double zp0 = -zp_max, zq0 = -zq_max;

  std::vector<cplx> buf(N * N);
  for (std::size_t i = 0; i < N; ++i) {
    const double zp = zp0 + static_cast<double>(i) * dzp;
    for (std::size_t j = 0; j < N; ++j) {
      const double zq = zq0 + static_cast<double>(j) * dzq;
      buf[i * N + j] = cf.q_tilde(zp, zq);
    }
  }
  fft_2d(buf, N, N, false);

  // density(p', q') = (2 pi hbar)^{-2} * FT[Qtilde](u = q'/hbar, v = -p'/hbar)
  const double du = 2.0 * std::numbers::pi / (n * dzp);
  const double dv = 2.0 * std::numbers::pi / (n * dzq);
  WignerGrid out;
  out.np = n;
  out.nq = n;
  out.hbar = hbar;
  out.dp = hbar * dv;
  out.dq = hbar * du;
  out.p0 = (-n / 2 + 1) * out.dp;  // p' = -hbar v, v on [-n/2, n/2) * dv
  out.q0 = (-n / 2) * out.dq;
  out.w = Eigen::MatrixXd::Zero(n, n);
  const double norm =
      dzp * dzq / std::pow(2.0 * std::numbers::pi * hbar, 2);
  for (std::size_t k = 0; k < N; ++k) {
    const double u = fft_frequency(k, N, dzp);
    const long long ku = std::llround(u / du);
    for (std::size_t l = 0; l < N; ++l) {
      const double v = fft_frequency(l, N, dzq);
      const long long lv = std::llround(v / dv);
      const cplx phase = std::exp(cplx(0.0, -(u * zp0 + v * zq0)));
      const double val = (phase * buf[k * N + l]).real() * norm;
      const long long ip = -lv + n / 2 - 1;  // p' = -hbar v ascending
      const long long jq = ku + n / 2;       // q' = +hbar u ascending
      out.w(ip, jq) = val;
    }
  }
  return out;
}

}  // namespace wndyn
