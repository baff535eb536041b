#include "wndyn/fft_utils.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wndyn {

void fft_1d(std::vector<cplx>& data, bool inverse) {
  const int n = static_cast<int>(data.size());
  if (n == 0) return;
  fftw_complex* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = fftw_plan_dft_1d(n, buf, buf,
                                    inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                    FFTW_ESTIMATE);
  if (!plan) throw std::runtime_error("fft_1d: planner failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  if (inverse) {
    const double inv = 1.0 / n;
    for (auto& z : data) z *= inv;
  }
}

void fft_2d(std::vector<cplx>& data, std::size_t n0, std::size_t n1, bool inverse) {
  if (data.size() != n0 * n1) throw std::invalid_argument("fft_2d: shape mismatch");
  fftw_complex* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(n0), static_cast<int>(n1), buf,
                                    buf, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                    FFTW_ESTIMATE);
  if (!plan) throw std::runtime_error("fft_2d: planner failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n0 * n1);
    for (auto& z : data) z *= inv;
  }
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  std::size_t n = 1;
  while (n < out_len) n <<= 1;
  std::vector<cplx> fa(n, cplx{0.0, 0.0}), fb(n, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
  fft_1d(fa, false);
  fft_1d(fb, false);
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  fft_1d(fa, true);
  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
  return out;
}

double fft_frequency(std::size_t k, std::size_t n, double d) {
  const long long half = static_cast<long long>(n) / 2;
  long long idx = static_cast<long long>(k);
  if (idx >= half) idx -= static_cast<long long>(n);
  return 2.0 * std::numbers::pi * static_cast<double>(idx) /
         (static_cast<double>(n) * d);
}

}  // namespace wndyn
