#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace wndyn {

/// Adaptive Simpson quadrature of f over [a, b].
///
/// Classic recursive bisection: a panel is accepted when the two-half Simpson
/// sum S2 agrees with the single-panel sum S1 to 15*tol, and the accepted
/// value is the Richardson update S2 + (S2 - S1)/15. `rel_tol` is applied
/// against a first-pass estimate of the integral's magnitude; `abs_floor`
/// guards integrals that are legitimately close to zero.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, double abs_floor = 0.0, int max_depth = 48);

/// Matrix-valued adaptive Simpson with max-abs-entry error control.
Eigen::MatrixXd adaptive_simpson_matrix(const std::function<Eigen::MatrixXd(double)>& f,
                                        double a, double b, double rel_tol,
                                        double abs_floor = 0.0, int max_depth = 40);

/// Composite Simpson on uniformly sampled values (spacing h). An even sample
/// count is closed with a three-point Newton-Cotes panel on the tail.
double simpson_uniform(const std::vector<double>& values, double h);

/// Cumulative integral on a uniform grid: out[k] = integral of the sampled
/// function from x0 to x0 + k*h. Composite Simpson on even prefixes; odd
/// prefixes add a quadratic-fit half panel, keeping O(h^4) accuracy.
std::vector<double> cumulative_integral(const std::vector<double>& values, double h);

/// Trapezoid on a uniform grid (used where the integrand is only piecewise
/// smooth and Simpson's extra order buys nothing).
double trapezoid_uniform(const std::vector<double>& values, double h);

}  // namespace wndyn
