#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cocycle/field.hpp"

namespace cocycle {
namespace io {

// Binary field format CCF1: magic "CCF1", little-endian u32 ell, u32 D,
// ell x u32 sizes, then N*D*D float64 values, row-major over grid then
// matrix entries. Scalar fields use D = 1. Rectangular D x 1 sections are
// stored as D x D fields with the vector in column 0 (sidecar records this).
inline constexpr char kMagic[4] = {'C', 'C', 'F', '1'};

namespace detail {
template <class T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void read_raw(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace detail

inline void write_ccf1(const std::filesystem::path& path, const MatrixField& field) {
  field.require_grid("write_ccf1");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_ccf1: cannot open " + path.string());
  out.write(kMagic, 4);
  detail::write_raw(out, static_cast<std::uint32_t>(field.grid().ell()));

  const bool vector_section = field.cols() == 1 && field.rows() > 1;
  const std::size_t d = field.rows();
  detail::write_raw(out, static_cast<std::uint32_t>(d));
  for (std::size_t s : field.grid().sizes) detail::write_raw(out, static_cast<std::uint32_t>(s));
  for (std::size_t j = 0; j < field.nodes(); ++j)
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        const double v = (vector_section ? (c == 0 ? field.value(j, r, 0) : 0.0)
                                         : field.value(j, r, c));
        detail::write_raw(out, v);
      }
  if (!out) throw ConfigError("write_ccf1: write failed for " + path.string());
}

inline MatrixField read_ccf1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("read_ccf1: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ConfigError("read_ccf1: bad magic in " + path.string());
  std::uint32_t ell = 0, d = 0;
  detail::read_raw(in, ell);
  detail::read_raw(in, d);
  if (ell == 0 || ell > 8 || d == 0 || d > 1024)
    throw ConfigError("read_ccf1: implausible header in " + path.string());
  std::vector<std::size_t> sizes(ell);
  for (auto& s : sizes) {
    std::uint32_t v = 0;
    detail::read_raw(in, v);
    s = v;
  }
  GridSpec grid(sizes);
  std::vector<double> values(grid.total() * d * d);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw ConfigError("read_ccf1: truncated file " + path.string());
  return MatrixField::from_values(grid, d, d, std::move(values));
}

// FNV-1a over file bytes, for run manifests.
inline std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("file_hash: cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[8192];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace io
}  // namespace cocycle
