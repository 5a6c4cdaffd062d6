#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cocycle/grid.hpp"

namespace cocycle {
namespace fft {

using cplx = std::complex<double>;

// In-place radix-2 Cooley-Tukey. sign = -1 forward, +1 inverse (no scaling).
inline void transform_pow2(cplx* data, std::size_t n, int sign) {
  if (n <= 1) return;
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        cplx u = data[i + k];
        cplx v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Multidimensional transform of one component laid out contiguously over the
// grid (row-major, axis 0 slowest). Forward divides by total N so that slot 0
// carries the mean.
inline void transform_nd(std::vector<cplx>& data, const GridSpec& grid, bool forward) {
  const std::size_t n_total = grid.total();
  std::vector<cplx> line;
  std::size_t stride_after = 1;  // product of sizes of axes after the current one
  for (std::size_t a = grid.ell(); a-- > 0;) {
    const std::size_t n = grid.sizes[a];
    const std::size_t block = n * stride_after;
    line.resize(n);
    for (std::size_t base = 0; base < n_total; base += block) {
      for (std::size_t off = 0; off < stride_after; ++off) {
        for (std::size_t m = 0; m < n; ++m) line[m] = data[base + off + m * stride_after];
        transform_pow2(line.data(), n, forward ? -1 : +1);
        for (std::size_t m = 0; m < n; ++m) data[base + off + m * stride_after] = line[m];
      }
    }
    stride_after *= n;
  }
  if (forward) {
    const double inv = 1.0 / static_cast<double>(n_total);
    for (cplx& c : data) c *= inv;
  }
}

}  // namespace fft
}  // namespace cocycle
