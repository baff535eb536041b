#pragma once

#include <cstddef>
#include <vector>

namespace wndyn {

/// Filon quadrature weights for a uniform grid with panel half-width h and
/// oscillation frequency t (theta = t*h). The classic alpha/beta/gamma
/// coefficient functions, with series fallbacks near theta = 0 where the
/// closed forms lose precision to cancellation.
struct FilonCoefficients {
  double alpha, beta, gamma;
};
FilonCoefficients filon_coefficients(double theta);

/// integral_{x0}^{x0 + n*h} f(x) cos(t x) dx for f sampled on the uniform grid
/// x_j = x0 + j*h, j = 0..n (n must be even). Exact for the oscillation on
/// each panel; error O(h^3 f''') uniformly in t.
double filon_cos(const std::vector<double>& f, double x0, double h, double t);

/// Same for integral f(x) sin(t x) dx.
double filon_sin(const std::vector<double>& f, double x0, double h, double t);

/// Semi-infinite oscillatory power tails:
///   tail_cos(n, x, t) = integral_x^inf cos(t v) / v^n dv
///   tail_sin(n, x, t) = integral_x^inf sin(t v) / v^n dv
/// for n >= 1, x > 0, t >= 0, evaluated by the downward recursion
///   I_n^c = cos(tx) x^{1-n}/(n-1) - t/(n-1) I_{n-1}^s
///   I_n^s = sin(tx) x^{1-n}/(n-1) + t/(n-1) I_{n-1}^c
/// seeded with I_1^c = -Ci(tx), I_1^s = pi/2 - Si(tx).
double tail_cos(int n, double x, double t);
double tail_sin(int n, double x, double t);

/// Sine and cosine integrals (GSL-backed).
double sine_integral(double x);
double cosine_integral(double x);  // x > 0

/// Dawson function F(x) = exp(-x^2) integral_0^x exp(u^2) du (GSL-backed).
double dawson(double x);

/// coth with the small-argument limit handled to full precision.
double coth(double x);

}  // namespace wndyn
