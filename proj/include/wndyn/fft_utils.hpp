#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace wndyn {

using cplx = std::complex<double>;

/// In-place 1-D FFT (forward: sign -1 in the exponent; inverse divides by n).
void fft_1d(std::vector<cplx>& data, bool inverse);

/// In-place 2-D FFT on row-major data of shape (n0, n1).
void fft_2d(std::vector<cplx>& data, std::size_t n0, std::size_t n1, bool inverse);

/// Linear (zero-padded) convolution of two real sequences:
/// out[k] = sum_j a[j] b[k-j], length a.size() + b.size() - 1.
std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b);

/// Signed FFT frequency for index k of an n-point transform with sample
/// spacing d: 2*pi*k'/(n*d) with k' in [-n/2, n/2).
double fft_frequency(std::size_t k, std::size_t n, double d);

}  // namespace wndyn
