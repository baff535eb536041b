#include "wndyn/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "wndyn/errors.hpp"
#include "wndyn/fft_utils.hpp"

namespace wndyn {

namespace {

bool valid_scale(double ell) { return ell > 0.0; }  // +inf allowed

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace

CovarianceSpec CovarianceSpec::gaussian(double C0, double ell_p, double ell_q,
                                        double hbar) {
  if (C0 < 0.0) throw std::invalid_argument("CovarianceSpec: C0 must be >= 0");
  if (!valid_scale(ell_p) || !valid_scale(ell_q))
    throw std::invalid_argument("CovarianceSpec: length scales must be in (0, inf]");
  if (!(hbar > 0.0)) throw std::invalid_argument("CovarianceSpec: hbar must be > 0");
  CovarianceSpec s;
  s.family = CovarianceFamily::kGaussian;
  s.C0 = C0;
  s.ell_p = ell_p;
  s.ell_q = ell_q;
  s.hbar = hbar;
  return s;
}

CovarianceSpec CovarianceSpec::constant(double C0, double hbar) {
  if (C0 < 0.0) throw std::invalid_argument("CovarianceSpec: C0 must be >= 0");
  if (!(hbar > 0.0)) throw std::invalid_argument("CovarianceSpec: hbar must be > 0");
  CovarianceSpec s;
  s.family = CovarianceFamily::kConstant;
  s.C0 = C0;
  s.hbar = hbar;
  return s;
}

CovarianceSpec CovarianceSpec::tabulated(std::vector<SpectralAtom> atoms, double hbar) {
  if (!(hbar > 0.0)) throw std::invalid_argument("CovarianceSpec: hbar must be > 0");
  for (const auto& a : atoms) {
    if (!(a.weight >= 0.0))
      throw std::invalid_argument("CovarianceSpec: atom weights must be >= 0");
    if (!std::isfinite(a.p) || !std::isfinite(a.q))
      throw std::invalid_argument("CovarianceSpec: atom positions must be finite");
  }
  CovarianceSpec s;
  s.family = CovarianceFamily::kTabulated;
  s.atoms = std::move(atoms);
  s.hbar = hbar;
  return s;
}

CovarianceSpec CovarianceSpec::tabulated_from_json(const std::string& json_text,
                                                   double hbar) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  if (!j.is_array())
    throw std::invalid_argument("tabulated_from_json: expected a JSON array of atoms");
  std::vector<SpectralAtom> atoms;
  atoms.reserve(j.size());
  for (const auto& item : j) {
    SpectralAtom a;
    a.p = item.at("p").get<double>();
    a.q = item.at("q").get<double>();
    a.weight = item.at("weight").get<double>();
    atoms.push_back(a);
  }
  return tabulated(std::move(atoms), hbar);
}

double CovarianceSpec::c00() const {
  switch (family) {
    case CovarianceFamily::kGaussian:
    case CovarianceFamily::kConstant:
      return C0;
    case CovarianceFamily::kTabulated: {
      double s = 0.0;
      for (const auto& a : atoms) s += a.weight;
      return s;
    }
  }
  return 0.0;
}

bool CovarianceSpec::is_q_only() const {
  switch (family) {
    case CovarianceFamily::kGaussian:
      return std::isinf(ell_p);
    case CovarianceFamily::kConstant:
      return true;
    case CovarianceFamily::kTabulated:
      return std::all_of(atoms.begin(), atoms.end(),
                         [](const SpectralAtom& a) { return a.q == 0.0; });
  }
  return false;
}

double eval_C(const CovarianceSpec& spec, double p, double q) {
  switch (spec.family) {
    case CovarianceFamily::kGaussian: {
      double expo = 0.0;
      if (std::isfinite(spec.ell_p)) expo += p * p / (2.0 * spec.ell_p * spec.ell_p);
      if (std::isfinite(spec.ell_q)) expo += q * q / (2.0 * spec.ell_q * spec.ell_q);
      return spec.C0 * std::exp(-expo);
    }
    case CovarianceFamily::kConstant:
      return spec.C0;
    case CovarianceFamily::kTabulated: {
      double s = 0.0;
      for (const auto& a : spec.atoms)
        s += a.weight * std::cos((p * a.q - q * a.p) / spec.hbar);
      return s;
    }
  }
  return 0.0;
}

double curvature_moment(const CovarianceSpec& spec, int mu, int nu) {
  if (mu < 0 || nu < 0)
    throw std::invalid_argument("curvature_moment: orders must be >= 0");
  if ((mu + nu) % 2 != 0) return 0.0;
  switch (spec.family) {
    case CovarianceFamily::kGaussian: {
      if (mu % 2 != 0 || nu % 2 != 0) return 0.0;
      // D_{mu,nu} = C0 / (2^{(mu+nu)/2} (mu/2)! (nu/2)! ell_p^mu ell_q^nu)
      const double denom_p = std::pow(spec.ell_p, mu);  // inf^0 == 1
      const double denom_q = std::pow(spec.ell_q, nu);
      if (std::isinf(denom_p) || std::isinf(denom_q)) return 0.0;
      return spec.C0 /
             (std::pow(2.0, (mu + nu) / 2) * factorial(mu / 2) * factorial(nu / 2) *
              denom_p * denom_q);
    }
    case CovarianceFamily::kConstant:
      return (mu == 0 && nu == 0) ? spec.C0 : 0.0;
    case CovarianceFamily::kTabulated: {
      double s = 0.0;
      for (const auto& a : spec.atoms)
        s += a.weight * std::pow(a.q / spec.hbar, mu) * std::pow(a.p / spec.hbar, nu);
      return s / (factorial(mu) * factorial(nu));
    }
  }
  return 0.0;
}

double q_curvature(const CovarianceSpec& spec) {
  return 2.0 * curvature_moment(spec, 0, 2);
}

DiffusionMatrix diffusion_matrix(const CovarianceSpec& spec) {
  DiffusionMatrix out;
  const double d02 = curvature_moment(spec, 0, 2);
  const double d11 = curvature_moment(spec, 1, 1);
  const double d20 = curvature_moment(spec, 2, 0);
  out.D << d02, 0.5 * d11, 0.5 * d11, d20;
  return out;
}

namespace {

PositivityReport finish_report(double min_component, double threshold,
                               std::size_t samples) {
  PositivityReport rep;
  rep.min_component = min_component;
  rep.threshold = threshold;
  rep.samples = samples;
  rep.pass = min_component >= -threshold;
  if (!rep.pass)
    throw NotPositiveType("covariance fails the positive-definiteness check: "
                          "minimum spectral component " +
                          std::to_string(min_component) + " < -" +
                          std::to_string(threshold));
  return rep;
}

}  // namespace

PositivityReport validate_positive_type(const CovarianceSpec& spec, int samples) {
  if (samples < 8)
    throw std::invalid_argument("validate_positive_type: need at least 8 samples");
  const double c00 = spec.c00();
  const double eps = 1e-8 * std::max(c00, 0.0);

  if (spec.family == CovarianceFamily::kTabulated) {
    // The atom list IS the spectral measure; its sampled transform would only
    // add truncation leakage around the exact atoms, so check it directly.
    double min_w = 0.0;
    for (const auto& a : spec.atoms) min_w = std::min(min_w, a.weight);
    return finish_report(min_w, eps, spec.atoms.size());
  }

  const std::size_t n = static_cast<std::size_t>(samples);
  // Box extents: wide enough that the Gaussian tail is negligible; a constant
  // direction (infinite scale) transforms to an exact lattice delta.
  double box_p = 1.0, box_q = 1.0;
  if (spec.family == CovarianceFamily::kGaussian) {
    const double fp = std::isfinite(spec.ell_p) ? spec.ell_p : 0.0;
    const double fq = std::isfinite(spec.ell_q) ? spec.ell_q : 0.0;
    const double ref = std::max({fp, fq, 1.0});
    box_p = 12.0 * (fp > 0.0 ? fp : ref);
    box_q = 12.0 * (fq > 0.0 ? fq : ref);
  }
  std::vector<cplx> grid(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = (static_cast<double>(i) - static_cast<double>(n) / 2) *
                     (2.0 * box_p / static_cast<double>(n));
    for (std::size_t j = 0; j < n; ++j) {
      const double q = (static_cast<double>(j) - static_cast<double>(n) / 2) *
                       (2.0 * box_q / static_cast<double>(n));
      // circular shift so the origin sits at index (0,0)
      const std::size_t ii = (i + n / 2) % n;
      const std::size_t jj = (j + n / 2) % n;
      grid[ii * n + jj] = eval_C(spec, p, q);
    }
  }
  fft_2d(grid, n, n, false);
  double min_comp = std::numeric_limits<double>::infinity();
  for (const auto& z : grid) min_comp = std::min(min_comp, z.real());
  // normalize like an average so the threshold is scale-free in grid size
  min_comp /= static_cast<double>(n * n);
  return finish_report(min_comp, eps, n * n);
}

PositivityReport validate_positive_type(const std::vector<double>& c_values,
                                        double step) {
  if (c_values.size() < 8)
    throw std::invalid_argument("validate_positive_type: need at least 8 samples");
  if (!(step > 0.0))
    throw std::invalid_argument("validate_positive_type: step must be > 0");
  const std::size_t n = c_values.size();
  double c00 = 0.0;
  for (double v : c_values) c00 = std::max(c00, std::abs(v));
  const double eps = 1e-8 * c00;
  std::vector<cplx> line(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jj = (j + n / 2) % n;  // origin (j = n/2) to index 0
    line[jj] = c_values[j];
  }
  fft_1d(line, false);
  double min_comp = std::numeric_limits<double>::infinity();
  for (const auto& z : line) min_comp = std::min(min_comp, z.real());
  min_comp /= static_cast<double>(n);
  return finish_report(min_comp, eps, n);
}

namespace {

struct FieldMode {
  double k = 0.0;       // spatial frequency
  double amp = 0.0;     // sqrt(weight)
};

std::vector<FieldMode> field_modes(const CovarianceSpec& spec) {
  std::vector<FieldMode> modes;
  switch (spec.family) {
    case CovarianceFamily::kConstant:
      // flat potential: zero force, no modes needed
      return modes;
    case CovarianceFamily::kTabulated: {
      for (const auto& a : spec.atoms) {
        if (a.weight == 0.0) continue;
        FieldMode m;
        m.k = a.p / spec.hbar;
        m.amp = std::sqrt(a.weight);
        modes.push_back(m);
      }
      return modes;
    }
    case CovarianceFamily::kGaussian: {
      // C(q) = C0 exp(-q^2/2 ell^2) = int_0^inf s(k) cos(k q) dk with
      // s(k) = C0 ell sqrt(2/pi) exp(-ell^2 k^2 / 2); midpoint discretization
      // up to k_max = 6/ell keeps the truncated covariance within 1e-3 C0.
      const double ell = spec.ell_q;
      if (std::isinf(ell)) {
        return modes;  // constant in q as well: no force
      }
      constexpr int kNumModes = 256;
      const double kmax = 6.0 / ell;
      const double dk = kmax / kNumModes;
      modes.reserve(kNumModes);
      for (int j = 0; j < kNumModes; ++j) {
        const double k = (j + 0.5) * dk;
        const double s = spec.C0 * ell * std::sqrt(2.0 / std::numbers::pi) *
                         std::exp(-0.5 * ell * ell * k * k);
        FieldMode m;
        m.k = k;
        m.amp = std::sqrt(s * dk);
        modes.push_back(m);
      }
      return modes;
    }
  }
  return modes;
}

}  // namespace

std::vector<double> sample_field_increment(const CovarianceSpec& spec,
                                           CounterRng& rng,
                                           const std::vector<double>& positions,
                                           double dt) {
  if (!spec.is_q_only())
    throw std::invalid_argument(
        "sample_field_increment: requires position-only noise (no p dependence)");
  if (dt < 0.0)
    throw std::invalid_argument("sample_field_increment: dt must be >= 0");
  std::vector<double> out(positions.size(), 0.0);
  if (dt == 0.0 || positions.empty()) return out;
  const std::vector<FieldMode> modes = field_modes(spec);
  const double root_dt = std::sqrt(dt);
  // potential increment dV(q) = sum_j amp_j sqrt(dt) [a_j cos(k q) + b_j sin(k q)]
  // force increment     -dV'(q) = sum_j amp_j k sqrt(dt) [a_j sin(k q) - b_j cos(k q)]
  for (const auto& m : modes) {
    const double a = rng.normal();
    const double b = rng.normal();
    const double scale = m.amp * m.k * root_dt;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const double kq = m.k * positions[i];
      out[i] += scale * (a * std::sin(kq) - b * std::cos(kq));
    }
  }
  return out;
}

}  // namespace wndyn
