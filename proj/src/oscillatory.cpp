#include "wndyn/oscillatory.hpp"

#include <gsl/gsl_sf_dawson.h>
#include <gsl/gsl_sf_expint.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wndyn {

FilonCoefficients filon_coefficients(double theta) {
  const double th = theta;
  FilonCoefficients c{};
  if (std::abs(th) < 0.15) {
    const double t2 = th * th;
    const double t3 = t2 * th;
    c.alpha = t3 * (2.0 / 45.0 - t2 * (2.0 / 315.0) + t2 * t2 * (2.0 / 4725.0));
    c.beta = 2.0 / 3.0 + t2 * (2.0 / 15.0) - t2 * t2 * (4.0 / 105.0) +
             t2 * t2 * t2 * (2.0 / 567.0);
    c.gamma = 4.0 / 3.0 - t2 * (2.0 / 15.0) + t2 * t2 / 210.0 -
              t2 * t2 * t2 / 11340.0;
  } else {
    const double s = std::sin(th), co = std::cos(th);
    const double t2 = th * th, t3 = t2 * th;
    c.alpha = (t2 + th * s * co - 2.0 * s * s) / t3;
    c.beta = 2.0 * (th * (1.0 + co * co) - 2.0 * s * co) / t3;
    c.gamma = 4.0 * (s - th * co) / t3;
  }
  return c;
}

namespace {

enum class Phase { Cos, Sin };

double filon_impl(const std::vector<double>& f, double x0, double h, double t,
                  Phase phase) {
  const std::size_t n = f.size() - 1;
  if (f.size() < 3 || n % 2 != 0) {
    throw std::invalid_argument("filon: need an odd sample count (even panel count)");
  }
  const FilonCoefficients c = filon_coefficients(t * h);
  // Sums over even-index samples (endpoints halved) and odd-index samples.
  double even = 0.0, odd = 0.0;
  for (std::size_t j = 0; j <= n; j += 2) {
    const double x = x0 + j * h;
    const double w = (phase == Phase::Cos) ? std::cos(t * x) : std::sin(t * x);
    double val = f[j] * w;
    if (j == 0 || j == n) val *= 0.5;
    even += val;
  }
  for (std::size_t j = 1; j < n; j += 2) {
    const double x = x0 + j * h;
    const double w = (phase == Phase::Cos) ? std::cos(t * x) : std::sin(t * x);
    odd += f[j] * w;
  }
  const double xa = x0, xb = x0 + n * h;
  double boundary;
  if (phase == Phase::Cos) {
    boundary = c.alpha * (f[n] * std::sin(t * xb) - f[0] * std::sin(t * xa));
  } else {
    boundary = -c.alpha * (f[n] * std::cos(t * xb) - f[0] * std::cos(t * xa));
  }
  return h * (boundary + c.beta * even + c.gamma * odd);
}

}  // namespace

double filon_cos(const std::vector<double>& f, double x0, double h, double t) {
  return filon_impl(f, x0, h, t, Phase::Cos);
}

double filon_sin(const std::vector<double>& f, double x0, double h, double t) {
  return filon_impl(f, x0, h, t, Phase::Sin);
}

double sine_integral(double x) { return gsl_sf_Si(x); }

double cosine_integral(double x) {
  if (!(x > 0.0)) {
    throw std::domain_error("cosine_integral: argument must be positive");
  }
  return gsl_sf_Ci(x);
}

double dawson(double x) { return gsl_sf_dawson(x); }

double coth(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-4) {
    // coth(x) = 1/x + x/3 - x^3/45 + ...
    return 1.0 / x + x / 3.0 - x * x * x / 45.0;
  }
  return 1.0 / std::tanh(x);
}

double tail_cos(int n, double x, double t) {
  if (n < 1 || !(x > 0.0)) throw std::invalid_argument("tail_cos: need n>=1, x>0");
  if (t == 0.0) {
    if (n == 1) throw std::domain_error("tail_cos: divergent at t=0, n=1");
    return std::pow(x, 1 - n) / (n - 1);
  }
  double ic = -cosine_integral(t * x);
  double is = std::numbers::pi / 2.0 - sine_integral(t * x);
  for (int k = 2; k <= n; ++k) {
    const double p = std::pow(x, 1 - k) / (k - 1);
    const double next_c = std::cos(t * x) * p - t / (k - 1) * is;
    const double next_s = std::sin(t * x) * p + t / (k - 1) * ic;
    ic = next_c;
    is = next_s;
  }
  return ic;
}

double tail_sin(int n, double x, double t) {
  if (n < 1 || !(x > 0.0)) throw std::invalid_argument("tail_sin: need n>=1, x>0");
  if (t == 0.0) return 0.0;
  double ic = -cosine_integral(t * x);
  double is = std::numbers::pi / 2.0 - sine_integral(t * x);
  for (int k = 2; k <= n; ++k) {
    const double p = std::pow(x, 1 - k) / (k - 1);
    const double next_c = std::cos(t * x) * p - t / (k - 1) * is;
    const double next_s = std::sin(t * x) * p + t / (k - 1) * ic;
    ic = next_c;
    is = next_s;
  }
  return is;
}

}  // namespace wndyn
