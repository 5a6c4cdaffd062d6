#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "cocycle/errors.hpp"

namespace cocycle {

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Regular grid on the torus [0,1)^ell, per-axis sizes restricted to powers
// of 2 so transforms and band halving stay exact.
struct GridSpec {
  std::vector<std::size_t> sizes;

  GridSpec() = default;
  explicit GridSpec(std::vector<std::size_t> sizes_in) : sizes(std::move(sizes_in)) {
    if (sizes.empty()) throw ConfigError("GridSpec: torus dimension must be >= 1");
    for (std::size_t n : sizes)
      if (!is_power_of_two(n)) throw ConfigError("GridSpec: sizes must be powers of 2");
  }
  static GridSpec dim1(std::size_t n) { return GridSpec(std::vector<std::size_t>{n}); }

  std::size_t ell() const { return sizes.size(); }
  std::size_t total() const {
    std::size_t n = 1;
    for (std::size_t s : sizes) n *= s;
    return n;
  }

  // Flat index <-> multi-index, row-major (axis 0 slowest).
  std::vector<std::size_t> unflatten(std::size_t idx) const {
    std::vector<std::size_t> mi(sizes.size());
    for (std::size_t a = sizes.size(); a-- > 0;) {
      mi[a] = idx % sizes[a];
      idx /= sizes[a];
    }
    return mi;
  }
  std::size_t flatten(const std::vector<std::size_t>& mi) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < sizes.size(); ++a) idx = idx * sizes[a] + (mi[a] % sizes[a]);
    return idx;
  }

  // Coordinates of grid node j on the torus.
  std::vector<double> node(std::size_t idx) const {
    auto mi = unflatten(idx);
    std::vector<double> theta(mi.size());
    for (std::size_t a = 0; a < mi.size(); ++a)
      theta[a] = static_cast<double>(mi[a]) / static_cast<double>(sizes[a]);
    return theta;
  }

  // Signed integer frequency for spectral slot m on an axis of size n:
  // m in [0, n/2] -> m, else m - n.
  static long long freq_of_slot(std::size_t m, std::size_t n) {
    return m <= n / 2 ? static_cast<long long>(m)
                      : static_cast<long long>(m) - static_cast<long long>(n);
  }

  bool operator==(const GridSpec& o) const { return sizes == o.sizes; }
  bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

}  // namespace cocycle
