#include "wndyn/quadrature.hpp"

#include <algorithm>
#include <stdexcept>

namespace wndyn {

namespace {

struct SimpsonPanel {
  double fa, fm, fb;  // endpoint and midpoint samples
  double s;           // Simpson sum over the panel
};

double panel_sum(double fa, double fm, double fb, double h) {
  return (h / 6.0) * (fa + 4.0 * fm + fb);
}

double adaptive_rec(const std::function<double(double)>& f, double a, double b,
                    const SimpsonPanel& p, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  SimpsonPanel left{p.fa, flm, p.fm, panel_sum(p.fa, flm, p.fm, m - a)};
  SimpsonPanel right{p.fm, frm, p.fb, panel_sum(p.fm, frm, p.fb, b - m)};
  const double s2 = left.s + right.s;
  const double err = s2 - p.s;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol) {
    return s2 + err / 15.0;
  }
  return adaptive_rec(f, a, m, left, 0.5 * tol, depth - 1) +
         adaptive_rec(f, m, b, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, double abs_floor, int max_depth) {
  if (a == b) return 0.0;
  // First pass: a 17-node composite Simpson estimate fixes the magnitude the
  // relative tolerance refers to, so the recursion has an absolute target.
  const int n0 = 16;
  const double h0 = (b - a) / n0;
  double coarse = 0.0;
  std::vector<double> fv(n0 + 1);
  for (int i = 0; i <= n0; ++i) fv[i] = f(a + i * h0);
  for (int i = 0; i < n0; i += 2) {
    coarse += panel_sum(fv[i], fv[i + 1], fv[i + 2], 2.0 * h0);
  }
  const double scale = std::max(std::abs(coarse), abs_floor);
  const double tol = (scale > 0.0) ? rel_tol * scale : rel_tol;
  double total = 0.0;
  for (int i = 0; i < n0; i += 2) {
    const double pa = a + i * h0, pb = a + (i + 2) * h0;
    SimpsonPanel p{fv[i], fv[i + 1], fv[i + 2],
                   panel_sum(fv[i], fv[i + 1], fv[i + 2], pb - pa)};
    total += adaptive_rec(f, pa, pb, p, tol * (pb - pa) / (b - a), max_depth);
  }
  return total;
}

namespace {

struct MatPanel {
  Eigen::MatrixXd fa, fm, fb, s;
};

Eigen::MatrixXd mat_panel_sum(const MatPanel& p, double h) {
  return (h / 6.0) * (p.fa + 4.0 * p.fm + p.fb);
}

Eigen::MatrixXd adaptive_mat_rec(const std::function<Eigen::MatrixXd(double)>& f,
                                 double a, double b, const MatPanel& p, double tol,
                                 int depth) {
  const double m = 0.5 * (a + b);
  MatPanel left{p.fa, f(0.5 * (a + m)), p.fm, {}};
  MatPanel right{p.fm, f(0.5 * (m + b)), p.fb, {}};
  left.s = mat_panel_sum(left, m - a);
  right.s = mat_panel_sum(right, b - m);
  const Eigen::MatrixXd s2 = left.s + right.s;
  const Eigen::MatrixXd err = s2 - p.s;
  if (depth <= 0 || err.cwiseAbs().maxCoeff() <= 15.0 * tol) {
    return s2 + err / 15.0;
  }
  return adaptive_mat_rec(f, a, m, left, 0.5 * tol, depth - 1) +
         adaptive_mat_rec(f, m, b, right, 0.5 * tol, depth - 1);
}

}  // namespace

Eigen::MatrixXd adaptive_simpson_matrix(const std::function<Eigen::MatrixXd(double)>& f,
                                        double a, double b, double rel_tol,
                                        double abs_floor, int max_depth) {
  Eigen::MatrixXd probe = f(a);
  if (a == b) return Eigen::MatrixXd::Zero(probe.rows(), probe.cols());
  MatPanel p{probe, f(0.5 * (a + b)), f(b), {}};
  p.s = mat_panel_sum(p, b - a);
  const double scale = std::max(p.s.cwiseAbs().maxCoeff(), abs_floor);
  const double tol = (scale > 0.0) ? rel_tol * scale : rel_tol;
  return adaptive_mat_rec(f, a, b, p, tol, max_depth);
}

double simpson_uniform(const std::vector<double>& values, double h) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * h * (values[0] + values[1]);
  double sum = 0.0;
  std::size_t i = 0;
  // Pairs of intervals; if the count of intervals is odd, stop two short and
  // close with the three-point right-edge Newton-Cotes rule.
  const std::size_t intervals = n - 1;
  const std::size_t paired = (intervals % 2 == 0) ? intervals : intervals - 3;
  for (; i + 2 <= paired; i += 2) {
    sum += (h / 3.0) * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
  }
  if (intervals % 2 != 0) {
    // Remaining three intervals: Simpson 3/8.
    const std::size_t j = n - 4;
    sum += (3.0 * h / 8.0) *
           (values[j] + 3.0 * values[j + 1] + 3.0 * values[j + 2] + values[j + 3]);
  }
  return sum;
}

std::vector<double> cumulative_integral(const std::vector<double>& values, double h) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  for (std::size_t k = 1; k < n; ++k) {
    if (k % 2 == 0) {
      out[k] = out[k - 2] +
               (h / 3.0) * (values[k - 2] + 4.0 * values[k - 1] + values[k]);
    } else if (k == 1) {
      // Quadratic through the first three samples, integrated over [x0, x1].
      if (n >= 3) {
        out[1] = (h / 12.0) * (5.0 * values[0] + 8.0 * values[1] - values[2]);
      } else {
        out[1] = 0.5 * h * (values[0] + values[1]);
      }
    } else {
      // Odd index: previous even prefix plus a quadratic-fit trailing panel.
      out[k] = out[k - 1] +
               (h / 12.0) * (-values[k - 2] + 8.0 * values[k - 1] + 5.0 * values[k]);
    }
  }
  return out;
}

double trapezoid_uniform(const std::vector<double>& values, double h) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < n; ++i) sum += values[i];
  return sum * h;
}

}  // namespace wndyn
