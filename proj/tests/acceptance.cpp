// Acceptance gate for the library: thirteen end-to-end checks, each pinning
// one exact result or inequality the code commits to, at desk scale.
//
//   acceptance                 runs every check
//   acceptance --criterion k   runs check k alone (k = 1..13)
//
// Each check prints a single [PASS]/[FAIL] line with its measured margins;
// the exit status is the number of failures.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wndyn/averaged_semigroup.hpp"
#include "wndyn/heat_bath.hpp"
#include "wndyn/monte_carlo.hpp"
#include "wndyn/noise_model.hpp"
#include "wndyn/phase_space.hpp"

using namespace wndyn;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool ok = true;
  std::string detail;
};

double rel_err(double value, double reference) {
  return std::abs(value - reference) / std::abs(reference);
}

// Ordinary least squares y ~ intercept + slope * x.
std::pair<double, double> line_fit(const std::vector<double>& x,
                                   const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  return {intercept, slope};
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// 1. Free-particle moments: stochastic estimates against the closed forms.
// ---------------------------------------------------------------------------
Outcome check_free_moments() {
  SimulationConfig c;
  c.n_traj = 100000;
  c.times = {0.5, 1.0, 2.0, 5.0};
  c.seed = 271828;
  c.H = QuadraticHamiltonian::free_particle(1.0, 1.0);
  c.noise = CovarianceSpec::gaussian(0.8, 1.2, 0.9);
  c.initial.mean << 0.3, -0.2;
  c.initial.cov << 0.5, 0.1, 0.1, 0.4;
  const MomentEstimate est = simulate_classical(c);

  const DiffusionMatrix D = diffusion_matrix(c.noise);
  MomentState init;
  init.mean = c.initial.mean;
  init.second = c.initial.cov + c.initial.mean * c.initial.mean.transpose();

  double worst = 0.0;
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    const MomentTable tab = propagate_moments(c.H, D, init, c.times[k]);
    const double pm = tab.values.at("p"), qm = tab.values.at("q");
    const double pv = tab.values.at("p2") - pm * pm;
    const double qv = tab.values.at("q2") - qm * qm;
    const double checks[4][3] = {
        {pm, est.p.mean[k], est.p.mean_se[k]},
        {qm, est.q.mean[k], est.q.mean_se[k]},
        {pv, est.p.var[k], est.p.var_se[k]},
        {qv, est.q.var[k], est.q.var_se[k]},
    };
    for (const auto& ch : checks)
      worst = std::max(worst, std::abs(ch[0] - ch[1]) / ch[2]);
  }
  Outcome o;
  o.ok = worst <= 3.0;
  o.detail = fmt("16 moment comparisons at 4 times, worst %.2f sigma", worst);
  return o;
}

// ---------------------------------------------------------------------------
// 2. Superballistic spreading: Var q / t^3 at late time, and the momentum
//    diffusion slope from a linear fit.
// ---------------------------------------------------------------------------
Outcome check_superballistic() {
  SimulationConfig c;
  c.n_traj = 400000;
  for (int k = 1; k <= 10; ++k) c.times.push_back(0.5 * k);
  c.seed = 314159;
  c.H = QuadraticHamiltonian::free_particle(1.0, 1.0);
  c.noise = CovarianceSpec::gaussian(1.0, kInf, 1.0);  // position noise only
  const MomentEstimate est = simulate_classical(c);

  const double d02 = diffusion_matrix(c.noise).d02();
  const double t = c.times.back();
  const double cubic = est.q.var.back() / (t * t * t);
  const double cubic_se = est.q.var_se.back() / (t * t * t);
  const double cubic_ref = 2.0 * d02 / 3.0;  // mass m = 1
  const double sig = std::abs(cubic - cubic_ref) / cubic_se;

  const auto [b0, slope] = line_fit(c.times, est.p.var);
  (void)b0;
  const double slope_err = rel_err(slope, 2.0 * d02);

  Outcome o;
  o.ok = sig <= 3.0 && slope_err <= 0.01;
  o.detail = fmt("Var q/t^3 off by %.2f sigma at t=%.1f; p-diffusion slope off %.3f%%",
                 sig, t, 100.0 * slope_err);
  return o;
}

// ---------------------------------------------------------------------------
// 3. Quartic position moment: grid evolution against the closed form with
//    its hbar^2 term, and the hbar = 0 form against the classical sampler.
// ---------------------------------------------------------------------------
Outcome check_quartic_moment() {
  const QuadraticHamiltonian H = QuadraticHamiltonian::free_particle(1.0, 1.0);
  const CovarianceSpec spec = CovarianceSpec::gaussian(1.0, 1.0, 1.0);
  const Eigen::Vector2d mean(0.0, 0.0);
  Eigen::Matrix2d cov;
  cov << 0.5, 0.0, 0.0, 0.5;  // pure state at hbar = 1
  const double t = 1.0;

  const WignerGrid w0 =
      WignerGrid::gaussian_state(256, 256, 16.0, 16.0, 1.0, mean, cov);
  const WignerGrid wt = evolve_wigner(w0, H, spec, t);

  const CurvatureCoefficients D = CurvatureCoefficients::from_spec(spec);
  const StateMoments init = StateMoments::gaussian(mean, cov);
  const double exact_q = free_q4_moment(1.0, D, 1.0, init, t);
  const double exact_c = free_q4_moment(1.0, D, 0.0, init, t);
  const double grid_err = rel_err(wt.moment(0, 4), exact_q);
  // The quantum correction must be a material part of the target value,
  // otherwise this comparison could not distinguish it.
  const double quantum_frac = (exact_q - exact_c) / exact_q;

  SimulationConfig c;
  c.n_traj = 100000;
  c.times = {t};
  c.seed = 161803;
  c.H = H;
  c.noise = spec;
  c.initial.mean = mean;
  c.initial.cov = cov;
  const MomentEstimate est = simulate_classical(c);
  // Zero mean throughout, so the central estimate is the raw moment.
  const double sig = std::abs(est.q.m4[0] - exact_c) / est.q.m4_se[0];

  Outcome o;
  o.ok = grid_err <= 0.01 && quantum_frac > 0.05 && sig <= 3.0;
  o.detail = fmt("grid <q^4> off %.3f%% (quantum part %.0f%%); classical MC off %.2f sigma",
                 100.0 * grid_err, 100.0 * quantum_frac, sig);
  return o;
}

// ---------------------------------------------------------------------------
// 4. Energy growth rate for the driven oscillator: exact transport and the
//    per-trajectory regression both recover D02/m + m w^2 D20.
// ---------------------------------------------------------------------------
Outcome check_energy_rate() {
  const double m = 1.2, omega = 0.8;
  const QuadraticHamiltonian H = QuadraticHamiltonian::harmonic(m, omega, 1.0);
  const CovarianceSpec spec = CovarianceSpec::gaussian(0.9, 1.1, 1.3);
  const DiffusionMatrix D = diffusion_matrix(spec);
  const double rate = D.d02() / m + m * omega * omega * D.d20();

  MomentState init;
  init.mean << 0.4, -0.1;
  Eigen::Matrix2d cov;
  cov << 0.5, 0.05, 0.05, 0.3;
  init.second = cov + init.mean * init.mean.transpose();
  const MomentTable t1 = propagate_moments(H, D, init, 0.7);
  const MomentTable t2 = propagate_moments(H, D, init, 1.9);
  const double exact_rate =
      (t2.values.at("H") - t1.values.at("H")) / (1.9 - 0.7);
  const double exact_err = rel_err(exact_rate, rate);

  SimulationConfig c;
  c.n_traj = 30000;
  c.times = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  c.seed = 602214;
  c.H = H;
  c.noise = spec;
  c.initial.mean = init.mean;
  c.initial.cov = cov;
  const MomentEstimate est = simulate_classical(c);
  const double sig = std::abs(est.slope_H - rate) / est.slope_H_se;

  Outcome o;
  o.ok = exact_err <= 1e-10 && sig <= 3.0;
  o.detail = fmt("exact rate off %.1e relative; MC regression off %.2f sigma",
                 exact_err, sig);
  return o;
}

// ---------------------------------------------------------------------------
// 5. Purity monotonicity on the grid: strictly dissipative for structured
//    noise, flat for a structureless (constant) covariance.
// ---------------------------------------------------------------------------
Outcome check_purity() {
  const QuadraticHamiltonian H = QuadraticHamiltonian::harmonic(1.0, 1.0, 1.0);
  const double dt = std::acos(-1.0) / 2.0;  // quarter period: exact transport
  const Eigen::Vector2d mean(0.8, 0.5);
  Eigen::Matrix2d cov;
  cov << 0.5, 0.0, 0.0, 0.5;

  const CovarianceSpec noisy = CovarianceSpec::gaussian(0.01, 1.0, 1.0);
  WignerGrid w = WignerGrid::gaussian_state(192, 192, 12.0, 12.0, 1.0, mean, cov);
  const double start = purity(w);
  double prev = start;
  double worst_rise = 0.0;
  for (int step = 0; step < 50; ++step) {
    w = evolve_wigner(w, H, noisy, dt);
    const double pu = purity(w);
    worst_rise = std::max(worst_rise, pu - prev);
    prev = pu;
  }
  const bool monotone = worst_rise <= 1e-8;
  const bool decayed = prev < start - 1e-4;

  const CovarianceSpec flat = CovarianceSpec::constant(0.6);
  WignerGrid v = WignerGrid::gaussian_state(192, 192, 12.0, 12.0, 1.0, mean, cov);
  const double base = purity(v);
  double worst_drift = 0.0;
  for (int step = 0; step < 50; ++step) {
    v = evolve_wigner(v, H, flat, dt);
    worst_drift = std::max(worst_drift, std::abs(purity(v) - base));
  }
  const bool constant = worst_drift <= 1e-8;

  Outcome o;
  o.ok = monotone && decayed && constant;
  o.detail = fmt("50 steps: worst rise %.1e, net drop %.4f; constant-C drift %.1e",
                 worst_rise, start - prev, worst_drift);
  return o;
}

// ---------------------------------------------------------------------------
// 6. Classical entropy: Boltzmann-Gibbs entropy nondecreasing under the
//    classical smear-and-flow evolution.
// ---------------------------------------------------------------------------
Outcome check_classical_entropy() {
  const QuadraticHamiltonian H = QuadraticHamiltonian::free_particle(1.0, 1.0);
  DiffusionMatrix D;
  D.D << 0.25, 0.0, 0.0, 0.0;  // position-noise diffusion only
  const Eigen::Vector2d mean(0.0, 0.5);
  Eigen::Matrix2d cov;
  cov << 0.4, 0.0, 0.0, 0.4;
  const WignerGrid rho0 =
      WignerGrid::gaussian_state(128, 192, 8.0, 12.0, 1.0, mean, cov, true);

  double prev = bg_entropy(rho0);
  double worst_drop = 0.0;
  for (int k = 1; k <= 8; ++k) {
    const WignerGrid rho = classical_evolve(rho0, H, D, 0.25 * k);
    const double s = bg_entropy(rho);
    worst_drop = std::max(worst_drop, prev - s);
    prev = s;
  }
  Outcome o;
  o.ok = worst_drop <= 1e-6;
  o.detail = fmt("entropy along 8 checkpoints, worst drop %.1e", worst_drop);
  return o;
}

// ---------------------------------------------------------------------------
// 7. Bracket reduction: for quadratic symbols the deformed bracket equals the
//    classical one coefficient-for-coefficient, and [q, p] = -1 exactly.
// ---------------------------------------------------------------------------
Outcome check_bracket_reduction() {
  const double hbar = 0.7;
  std::mt19937 rng(7u);
  std::uniform_real_distribution<double> U(-2.0, 2.0);

  PolynomialSymbol g(hbar);
  for (int mu = 0; mu <= 6; ++mu)
    for (int nu = 0; mu + nu <= 6; ++nu)
      g.add_term(mu, nu, {U(rng), U(rng)});

  std::vector<PolynomialSymbol> quads;
  for (int mu = 0; mu <= 2; ++mu)
    for (int nu = 0; mu + nu <= 2; ++nu)
      quads.push_back(PolynomialSymbol::monomial(mu, nu, 1.0, hbar));
  PolynomialSymbol mix(hbar);  // a full random quadratic
  for (int mu = 0; mu <= 2; ++mu)
    for (int nu = 0; mu + nu <= 2; ++nu) mix.add_term(mu, nu, {U(rng), U(rng)});
  quads.push_back(mix);

  bool exact = true;
  for (const auto& f : quads) {
    const PolynomialSymbol diff = moyal_bracket(f, g) - poisson_bracket(f, g);
    exact = exact && diff.is_zero(0.0);
  }

  const PolynomialSymbol qs = PolynomialSymbol::monomial(0, 1, 1.0, hbar);
  const PolynomialSymbol ps = PolynomialSymbol::monomial(1, 0, 1.0, hbar);
  const PolynomialSymbol com = moyal_bracket(qs, ps);
  const PolynomialSymbol minus_one = PolynomialSymbol::constant(-1.0, hbar);
  const bool canonical = (com - minus_one).is_zero(0.0);

  Outcome o;
  o.ok = exact && canonical;
  o.detail = fmt("%zu quadratic symbols vs degree-6 partner: %s; [q,p] %s",
                 quads.size(), exact ? "coefficient-exact" : "MISMATCH",
                 canonical ? "= -1 exactly" : "WRONG");
  return o;
}

// ---------------------------------------------------------------------------
// 8. Green-function structure: initial values to order two, causality, the
//    long-time plateau at zero frequency, and the zero-oscillator limit.
// ---------------------------------------------------------------------------
Outcome check_green_structure() {
  const SpectralDensity J = SpectralDensity::drude(1.0, 1.0);
  const GreenFunction gf = green(J, 1.0, 1.0, 2.0, 8192, 8192);
  // Three-point extrapolation to 0+ (kills linear and quadratic error terms).
  const auto extrap = [](const std::function<double(double)>& f, double d) {
    return 3.0 * f(d) - 3.0 * f(2.0 * d) + f(3.0 * d);
  };
  const double d = 2e-3;
  const double g0 = extrap([&](double s) { return gf.G(s); }, d);
  const double gd0 = extrap([&](double s) { return gf.Gdot(s); }, d);
  const double gdd0 = extrap([&](double s) { return gf.Gddot(s); }, d);
  const bool initial_ok =
      std::abs(g0) <= 1e-4 && std::abs(gd0 - 1.0) <= 1e-4 && std::abs(gdd0) <= 1e-4;

  const bool causal = gf.G(-0.3) == 0.0 && gf.Gdot(-1e-3) == 0.0 &&
                      gf.Gddot(-5.0) == 0.0;

  const GreenFunction gfree = green(J, 1.0, 0.0, 50.0, 2048, 4096);
  const double pi = std::acos(-1.0);
  const double plateau_err = rel_err(gfree.G(45.0), 1.0 / pi);
  const bool plateau_ok =
      std::abs(gfree.plateau() - 1.0 / pi) <= 1e-12 && plateau_err <= 0.005;

  BathSpec empty;
  empty.n = 0;
  empty.m = 1.0;
  empty.omega = 1.3;
  const FiniteBath fb(empty);
  double sup = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double s = 0.05 * k;
    sup = std::max(sup, std::abs(fb.gn(s) - std::sin(1.3 * s) / 1.3));
  }
  const bool limit_ok = sup <= 1e-3;

  Outcome o;
  o.ok = initial_ok && causal && plateau_ok && limit_ok;
  o.detail = fmt("0+ values (%.1e, 1%+.1e, %.1e); causal %s; plateau off %.3f%%; "
                 "empty-bath sup %.1e",
                 g0, gd0 - 1.0, gdd0, causal ? "yes" : "NO",
                 100.0 * plateau_err, sup);
  return o;
}

// ---------------------------------------------------------------------------
// 9. Finite-bath response: the two inversion routes agree to 1e-10 for small
//    baths, and the discretized-bath response converges to the macroscopic
//    Green function monotonically in the oscillator count.
// ---------------------------------------------------------------------------
Outcome check_finite_bath() {
  std::mt19937 rng(9u);
  std::uniform_real_distribution<double> Um(0.2, 1.5), Uf(0.0, 0.8);
  double worst_identity = 0.0;
  for (int n = 1; n <= 20; ++n) {
    BathSpec spec;
    spec.n = n;
    spec.m = 1.1;
    spec.omega = 0.9;
    for (int j = 0; j < n; ++j) {
      spec.masses.push_back(Um(rng));
      spec.frequencies.push_back(0.3 + (j + Uf(rng)) * 4.5 / n);
    }
    const FiniteBath fb(spec);
    for (int k = 1; k <= 12; ++k)
      worst_identity = std::max(worst_identity, gn_identity_check(fb, 0.25 * k));
  }
  const bool identity_ok = worst_identity <= 1e-10;

  const SpectralDensity J = SpectralDensity::drude(1.0, 1.0);
  const GreenFunction gf = green(J, 1.0, 1.0, 12.0, 4096, 8192);
  std::vector<double> sups;
  for (const int n : {100, 200, 400, 800}) {
    const BathSpec spec = discretize_bath(J, n, 60.0, 1.0, 1.0);
    const FiniteBath fb(spec);
    double sup = 0.0;
    for (int k = 0; k <= 200; ++k) {
      const double s = 10.0 * k / 200.0;
      sup = std::max(sup, std::abs(fb.gn(s) - gf.G(s)));
    }
    sups.push_back(sup);
  }
  const bool monotone =
      sups[0] > sups[1] && sups[1] > sups[2] && sups[2] > sups[3];

  Outcome o;
  o.ok = identity_ok && monotone;
  o.detail = fmt("identity residual %.1e (n<=20); sup errors %.2e > %.2e > %.2e > %.2e",
                 worst_identity, sups[0], sups[1], sups[2], sups[3]);
  return o;
}

// ---------------------------------------------------------------------------
// 10. Thermal second moments: three independent representations agree on a
//     parameter sweep, the kinetic/potential inequality chain holds at every
//     point, and the weak-coupling / classical limits come out right.
// ---------------------------------------------------------------------------
Outcome check_thermal_values() {
  const double m = 1.0, omega = 1.0, hbar = 1.0, omega0 = 2.0;
  double worst_route = 0.0;
  bool chain_ok = true;
  for (const double beta : {0.5, 1.0, 2.0}) {
    for (const double J0 : {0.3, 0.6, 1.2}) {
      const SpectralDensity J = SpectralDensity::drude(J0, omega0);
      const ThermalValues a = thermal_values(J, m, omega, beta, hbar,
                                             ThermalMethod::kSpectralIntegral);
      const ThermalValues b =
          thermal_values(J, m, omega, beta, hbar, ThermalMethod::kPvIntegral);
      const ThermalValues c =
          thermal_values(J, m, omega, beta, hbar, ThermalMethod::kMatsubara);
      const std::pair<double, double> routes[] = {
          {a.p2, b.p2}, {a.p2, c.p2}, {b.p2, c.p2},
          {a.q2, b.q2}, {a.q2, c.q2}, {b.q2, c.q2}};
      for (const auto& [x, y] : routes)
        worst_route = std::max(worst_route, rel_err(x, y));

      const double wJ = std::sqrt(omega * omega + J.kernel0() / m);
      const double e_w = 1.0 / (2.0 * beta_eff(hbar * omega, beta));
      const double e_wJ = 1.0 / (2.0 * beta_eff(hbar * wJ, beta));
      const double qpot = 0.5 * m * omega * omega * a.q2;
      const double pkin = a.p2 / (2.0 * m);
      const double lower =
          std::max(1.0 / (2.0 * beta), (omega / wJ) * (omega / wJ) * e_wJ);
      const double slack = 1e-9 * (1.0 + pkin);
      chain_ok = chain_ok && lower <= qpot + slack && qpot <= e_w + slack &&
                 e_w <= pkin + slack && pkin <= e_wJ + slack;
    }
  }
  const bool routes_ok = worst_route <= 1e-3;

  const SpectralDensity weak = SpectralDensity::drude(1e-4, omega0);
  const double bw = 1.3;
  const ThermalValues wv =
      thermal_values(weak, m, omega, bw, hbar, ThermalMethod::kMatsubara);
  const double coth = 1.0 / std::tanh(bw * hbar * omega / 2.0);
  const double weak_err =
      std::max(rel_err(wv.p2, 0.5 * m * hbar * omega * coth),
               rel_err(wv.q2, 0.5 * hbar / (m * omega) * coth));
  const bool weak_ok = weak_err <= 0.01;

  const SpectralDensity Jc = SpectralDensity::drude(0.6, omega0);
  const double bc = 2.0;
  const ThermalValues cv =
      thermal_values(Jc, m, omega, bc, 1e-4, ThermalMethod::kSpectralIntegral);
  const double class_err = std::max(rel_err(cv.p2, m / bc),
                                    rel_err(cv.q2, 1.0 / (bc * m * omega * omega)));
  const bool class_ok = class_err <= 1e-3;

  Outcome o;
  o.ok = routes_ok && chain_ok && weak_ok && class_ok;
  o.detail = fmt("routes within %.4f%%; chain %s; weak-coupling off %.2f%%; "
                 "classical limit off %.3f%%",
                 100.0 * worst_route, chain_ok ? "holds" : "BROKEN",
                 100.0 * weak_err, 100.0 * class_err);
  return o;
}

// ---------------------------------------------------------------------------
// 11. Long-time saturation: the reduced moments reach their stationary values,
//     both Plancherel identities close, and the undamped-frequency case
//     diffuses at the predicted constant.
// ---------------------------------------------------------------------------
Outcome check_saturation() {
  const SpectralDensity J = SpectralDensity::drude(0.8, 1.5);
  const double m = 1.3, omega = 1.1, beta = 1.7, hbar = 1.0, curv = 0.4;
  const GreenFunction gf = green(J, m, omega, 60.0, 8192, 8192);
  const double tsat = 10.0 / gf.eta();

  InitialSecondMoments init;
  init.p_mean = 0.6;
  init.q_mean = -0.4;
  init.p2 = 0.9;
  init.pq = 0.1;
  init.q2 = 0.7;
  const ReducedMoments rm = reduced_moments(J, curv, m, omega, beta, hbar,
                                            {0.0, tsat}, init, 8192, 8192);
  const LongtimeLimits lim = longtime_limits(J, curv, m, omega, beta, hbar);
  const double p2_err = rel_err(rm.p2.back(), lim.p2_limit);
  const double q2_err = rel_err(rm.q2.back(), lim.q2_limit);
  const bool saturated = p2_err <= 0.01 && q2_err <= 0.01;

  // Plancherel closure for Gdot and G: time-side integrals against
  // frequency-side integrals with an analytic 1/nu^2-tail correction.
  const auto& tg = gf.t_grid();
  const double dt = tg[1] - tg[0];
  double t_side_p = 0.0, t_side_q = 0.0;
  for (std::size_t i = 0; i + 1 < tg.size(); ++i) {
    const double fp = gf.Gdot_samples()[i], fp1 = gf.Gdot_samples()[i + 1];
    const double fq = gf.G_samples()[i], fq1 = gf.G_samples()[i + 1];
    t_side_p += 0.5 * dt * (fp * fp + fp1 * fp1);
    t_side_q += 0.5 * dt * (fq * fq + fq1 * fq1);
  }
  const double pi = std::acos(-1.0);
  const double lam = 400.0;
  const int nseg = 40000;  // Simpson on [0, lam]
  const double h = lam / nseg;
  double f_side_p = 0.0, f_side_q = 0.0;
  for (int i = 0; i <= nseg; ++i) {
    const double nu = i * h;
    const double a2 = std::norm(gf.Ghat(nu));
    const double wgt = (i == 0 || i == nseg) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    f_side_p += wgt * nu * nu * a2;
    f_side_q += wgt * a2;
  }
  f_side_p = f_side_p * h / 3.0 / pi + 1.0 / (pi * lam);
  f_side_q = f_side_q * h / 3.0 / pi;
  const double par_p = rel_err(t_side_p, f_side_p);
  const double par_q = rel_err(t_side_q, f_side_q);
  const bool parseval_ok = par_p <= 0.005 && par_q <= 0.005;

  const SpectralDensity Jd = SpectralDensity::drude(1.0, 1.0);
  const std::vector<double> late = {20.0, 30.0, 40.0, 50.0, 60.0};
  const ReducedMoments rd = reduced_moments(Jd, 0.0, 1.0, 0.0, 1.0, 1.0, late,
                                            InitialSecondMoments{}, 8192, 8192);
  const auto [c0, slope] = line_fit(late, rd.q2);
  (void)c0;
  const double dref =
      longtime_limits(Jd, 0.0, 1.0, 0.0, 1.0, 1.0).diffusion_constant;
  const double diff_err = rel_err(slope, dref);
  const bool diffusion_ok = diff_err <= 0.02;

  Outcome o;
  o.ok = saturated && parseval_ok && diffusion_ok;
  o.detail = fmt("saturation off (%.2f%%, %.2f%%); Plancherel off (%.3f%%, %.3f%%); "
                 "diffusion slope off %.2f%%",
                 100.0 * p2_err, 100.0 * q2_err, 100.0 * par_p, 100.0 * par_q,
                 100.0 * diff_err);
  return o;
}

// ---------------------------------------------------------------------------
// 12. Total-system cross-check: the sampled (n+1)-oscillator model against
//     the reduced-dynamics pipeline, with a bounded discretization allowance.
// ---------------------------------------------------------------------------
Outcome check_total_system() {
  const SpectralDensity J = SpectralDensity::drude(0.4, 2.0);
  const double m = 1.0, omega = 1.0, beta = 1.0, hbar = 1.0;
  const CovarianceSpec noise = CovarianceSpec::gaussian(0.5, kInf, 1.0);
  const double allowance = 0.02;  // bath-discretization budget

  SimulationConfig c;
  c.n_traj = 10000;
  c.times = {0.5, 1.0, 2.0, 3.0, 5.0};
  c.seed = 112358;
  c.H = QuadraticHamiltonian::harmonic(m, omega, hbar);
  c.noise = noise;
  c.bath = discretize_bath(J, 400, 80.0, m, omega);
  c.beta = beta;
  c.hbar = hbar;
  c.initial.mean << 1.0, 0.0;
  c.initial.cov << 0.3, 0.0, 0.0, 0.2;
  const MomentEstimate est = simulate_total_system(c);

  InitialSecondMoments init;
  init.p_mean = 1.0;
  init.q_mean = 0.0;
  init.p2 = 0.3 + 1.0;
  init.pq = 0.0;
  init.q2 = 0.2;
  const ReducedMoments rm =
      reduced_moments(J, q_curvature(noise), m, omega, beta, hbar, c.times,
                      init, 8192, 8192);

  double worst_excess = -kInf;
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    const double scale_p = std::sqrt(rm.p2[k]), scale_q = std::sqrt(rm.q2[k]);
    const double p2_mc = est.p.var[k] + est.p.mean[k] * est.p.mean[k];
    const double q2_mc = est.q.var[k] + est.q.mean[k] * est.q.mean[k];
    const double p2_se = std::hypot(est.p.var_se[k],
                                    2.0 * est.p.mean[k] * est.p.mean_se[k]);
    const double q2_se = std::hypot(est.q.var_se[k],
                                    2.0 * est.q.mean[k] * est.q.mean_se[k]);
    const double checks[4][4] = {
        {est.p.mean[k], rm.p_mean[k], est.p.mean_se[k], scale_p},
        {est.q.mean[k], rm.q_mean[k], est.q.mean_se[k], scale_q},
        {p2_mc, rm.p2[k], p2_se, rm.p2[k]},
        {q2_mc, rm.q2[k], q2_se, rm.q2[k]},
    };
    for (const auto& ch : checks) {
      const double excess =
          std::abs(ch[0] - ch[1]) - 3.0 * ch[2] - allowance * std::abs(ch[3]);
      worst_excess = std::max(worst_excess, excess);
    }
  }
  Outcome o;
  o.ok = worst_excess <= 0.0;
  o.detail = fmt("20 comparisons vs 3 sigma + %.0f%% allowance, worst margin %+.3f",
                 100.0 * allowance, worst_excess);
  return o;
}

// ---------------------------------------------------------------------------
// 13. Smearing-density bound: the recovered density of the decaying part is
//     nonnegative and below t (2 pi hbar^2)^-2 * integral |C|.
// ---------------------------------------------------------------------------
Outcome check_density_bound() {
  const double pi = std::acos(-1.0);
  struct Case {
    QuadraticHamiltonian H;
    CovarianceSpec spec;
    double t, hbar;
  };
  const std::vector<Case> cases = {
      {QuadraticHamiltonian::free_particle(1.0, 1.0),
       CovarianceSpec::gaussian(1.0, 1.0, 1.0), 1.0, 1.0},
      {QuadraticHamiltonian::harmonic(1.0, 1.0, 0.9),
       CovarianceSpec::gaussian(0.7, 1.3, 0.8, 0.9), 1.7, 0.9},
  };
  bool ok = true;
  double worst_ratio = 0.0, worst_neg = 0.0, worst_mass = 0.0;
  for (const auto& cs : cases) {
    const CharacteristicFn cf = characteristic_fn(cs.H, cs.spec, cs.t, cs.hbar);
    const WignerGrid Q = q_density_grid(cf, 256, 12.0, 12.0);
    const double integral_C =
        cs.spec.C0 * 2.0 * pi * cs.spec.ell_p * cs.spec.ell_q;
    const double h2 = cs.hbar * cs.hbar;
    const double bound = cs.t / (4.0 * pi * pi * h2 * h2) * integral_C;
    worst_ratio = std::max(worst_ratio, Q.w.maxCoeff() / bound);
    worst_neg = std::min(worst_neg, Q.w.minCoeff() / bound);
    worst_mass = std::max(worst_mass, std::abs(Q.mass() - cf.q_mass()));
    ok = ok && Q.w.maxCoeff() <= bound && Q.w.minCoeff() >= -1e-9 * bound;
  }
  ok = ok && worst_mass <= 1e-4;
  Outcome o;
  o.ok = ok;
  o.detail = fmt("peak/bound %.3f, min/bound %+.1e, decaying-mass error %.1e",
                 worst_ratio, worst_neg, worst_mass);
  return o;
}

// ---------------------------------------------------------------------------

struct Criterion {
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"free-particle moments", check_free_moments},
    {"superballistic spreading", check_superballistic},
    {"quartic position moment", check_quartic_moment},
    {"energy growth rate", check_energy_rate},
    {"purity monotonicity", check_purity},
    {"classical entropy growth", check_classical_entropy},
    {"bracket reduction", check_bracket_reduction},
    {"green-function structure", check_green_structure},
    {"finite-bath response", check_finite_bath},
    {"thermal-value routes", check_thermal_values},
    {"long-time saturation", check_saturation},
    {"total-system cross-check", check_total_system},
    {"smearing-density bound", check_density_bound},
};
constexpr int kNumCriteria = static_cast<int>(std::size(kCriteria));

int run_one(int k) {
  const Criterion& cr = kCriteria[k - 1];
  Outcome o;
  try {
    o = cr.run();
  } catch (const std::exception& e) {
    o.ok = false;
    o.detail = fmt("exception: %s", e.what());
  }
  std::printf("[%s] criterion %d (%s): %s\n", o.ok ? "PASS" : "FAIL", k,
              cr.name, o.detail.c_str());
  std::fflush(stdout);
  return o.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  int which = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      which = std::atoi(argv[i + 1]);
      ++i;
    } else {
      std::fprintf(stderr, "usage: %s [--criterion k]   (k = 1..%d)\n",
                   argv[0], kNumCriteria);
      return 64;
    }
  }
  if (which < 0 || which > kNumCriteria) {
    std::fprintf(stderr, "criterion out of range: %d\n", which);
    return 64;
  }
  int failures = 0;
  if (which > 0) {
    failures = run_one(which);
  } else {
    for (int k = 1; k <= kNumCriteria; ++k) failures += run_one(k);
  }
  return failures;
}
