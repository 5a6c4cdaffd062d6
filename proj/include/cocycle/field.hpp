#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "cocycle/errors.hpp"
#include "cocycle/fft.hpp"
#include "cocycle/grid.hpp"
#include "cocycle/parallel.hpp"
#include "cocycle/rotation.hpp"

namespace cocycle {

using fft::cplx;
using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ShiftStrategy { GridInterp, FourierDiag, SpectralOnly };
enum class ProductStrategy { Grid, CauchySpectral };

// Matrix-valued function on T^ell sampled on a regular grid, with an optional
// Fourier-coefficient representation over the same index set. Values are
// immutable from the outside; operations return new fields.
//
// Layout: node-major then row-major matrix entries, [node][r][c]. Spectral
// slots use the same flat indexing with signed frequencies per
// GridSpec::freq_of_slot.
class MatrixField {
 public:
  MatrixField() = default;
  MatrixField(GridSpec grid, std::size_t rows, std::size_t cols)
      : grid_(std::move(grid)),
        rows_(rows),
        cols_(cols),
        values_(grid_.total() * rows * cols, 0.0),
        grid_valid_(true) {}
  MatrixField(GridSpec grid, std::size_t dim) : MatrixField(std::move(grid), dim, dim) {}

  static MatrixField from_values(GridSpec grid, std::size_t rows, std::size_t cols,
                                 std::vector<double> values) {
    MatrixField f(std::move(grid), rows, cols);
    if (values.size() != f.values_.size()) throw ConfigError("MatrixField: value array size mismatch");
    f.values_ = std::move(values);
    return f;
  }
  static MatrixField from_spectral(GridSpec grid, std::size_t rows, std::size_t cols,
                                   std::vector<cplx> coeffs) {
    MatrixField f(std::move(grid), rows, cols);
    if (coeffs.size() != f.values_.size()) throw ConfigError("MatrixField: coefficient array size mismatch");
    f.spectral_ = std::move(coeffs);
    f.grid_valid_ = false;
    f.spectral_valid_ = true;
    f.values_.assign(f.values_.size(), 0.0);
    return f;
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t dim() const {
    if (rows_ != cols_) throw ConfigError("MatrixField: dim() on non-square field");
    return rows_;
  }
  std::size_t nodes() const { return grid_.total(); }
  bool has_grid() const { return grid_valid_; }
  bool has_spectral() const { return spectral_valid_; }

  double value(std::size_t node, std::size_t r, std::size_t c) const {
    return values_[(node * rows_ + r) * cols_ + c];
  }
  double& value(std::size_t node, std::size_t r, std::size_t c) {
    return values_[(node * rows_ + r) * cols_ + c];
  }
  Eigen::Map<const MatrixRM> mat(std::size_t node) const {
    return Eigen::Map<const MatrixRM>(values_.data() + node * rows_ * cols_,
                                      static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  }
  Eigen::Map<MatrixRM> mat(std::size_t node) {
    return Eigen::Map<MatrixRM>(values_.data() + node * rows_ * cols_,
                                static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  }
  const std::vector<double>& raw_values() const { return values_; }
  const std::vector<cplx>& raw_spectral() const { return spectral_; }

  cplx coeff_slot(std::size_t slot, std::size_t r, std::size_t c) const {
    return spectral_[(slot * rows_ + r) * cols_ + c];
  }
  // Coefficient by signed frequency vector; frequencies outside the band are 0.
  cplx coeff(const std::vector<long long>& k, std::size_t r, std::size_t c) const {
    std::vector<std::size_t> mi(grid_.ell());
    for (std::size_t a = 0; a < grid_.ell(); ++a) {
      const auto n = static_cast<long long>(grid_.sizes[a]);
      long long ka = k.at(a);
      if (ka < -n / 2 || ka >= n - n / 2) return cplx(0.0);
      mi[a] = static_cast<std::size_t>(ka >= 0 ? ka : ka + n);
    }
    return coeff_slot(grid_.flatten(mi), r, c);
  }

  double sup_norm() const {
    require_grid("sup_norm");
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  bool all_finite() const {
    for (double v : values_) if (!std::isfinite(v)) return false;
    return true;
  }

  // Divides both representations by s.
  void scale(double s) {
    const double inv = 1.0 / s;
    for (double& v : values_) v *= inv;
    for (cplx& c : spectral_) c *= inv;
  }

  void require_grid(const char* who) const {
    if (!grid_valid_) throw ConfigError(std::string(who) + ": grid representation not valid");
  }
  void require_spectral(const char* who) const {
    if (!spectral_valid_) throw ConfigError(std::string(who) + ": spectral representation not valid");
  }

  friend MatrixField to_spectral(const MatrixField& f);
  friend MatrixField to_grid(const MatrixField& f);
  friend MatrixField shift(const MatrixField& f, const RotationVector& delta, ShiftStrategy s, int order);
  friend MatrixField pointwise_product(const MatrixField& A, const MatrixField& B, ProductStrategy s,
                                       bool antialias);

 private:
  GridSpec grid_;
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> values_;
  std::vector<cplx> spectral_;
  bool grid_valid_ = false;
  bool spectral_valid_ = false;
};

// Scalar fields are D=1 matrix fields; the alias marks intent at call sites.
using ScalarField = MatrixField;

namespace detail {

// Forward/inverse DFT of every matrix component; spectral layout mirrors grid
// layout, so components sit strided by rows*cols.
inline std::vector<cplx> forward_components(const std::vector<double>& values, const GridSpec& grid,
                                            std::size_t comps) {
  const std::size_t n = grid.total();
  std::vector<cplx> out(values.size());
  std::vector<cplx> buf(n);
  for (std::size_t e = 0; e < comps; ++e) {
    for (std::size_t j = 0; j < n; ++j) buf[j] = values[j * comps + e];
    fft::transform_nd(buf, grid, true);
    for (std::size_t j = 0; j < n; ++j) out[j * comps + e] = buf[j];
  }
  return out;
}

inline std::vector<cplx> inverse_components(const std::vector<cplx>& coeffs, const GridSpec& grid,
                                            std::size_t comps) {
  const std::size_t n = grid.total();
  std::vector<cplx> out(coeffs.size());
  std::vector<cplx> buf(n);
  for (std::size_t e = 0; e < comps; ++e) {
    for (std::size_t j = 0; j < n; ++j) buf[j] = coeffs[j * comps + e];
    fft::transform_nd(buf, grid, false);
    for (std::size_t j = 0; j < n; ++j) out[j * comps + e] = buf[j];
  }
  return out;
}

// Lagrange weights on the 4-point stencil {-1,0,1,2} at parameter u in [0,1).
inline std::array<double, 4> cubic_weights(double u) {
  return {-u * (u - 1.0) * (u - 2.0) / 6.0, (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
          -(u + 1.0) * u * (u - 2.0) / 2.0, (u + 1.0) * u * (u - 1.0) / 6.0};
}

}  // namespace detail

inline MatrixField to_spectral(const MatrixField& f) {
  f.require_grid("to_spectral");
  if (!f.all_finite()) throw ConfigError("to_spectral: non-finite entries in field");
  MatrixField out = f;
  out.spectral_ = detail::forward_components(f.values_, f.grid_, f.rows_ * f.cols_);
  out.spectral_valid_ = true;
  return out;
}

inline MatrixField to_grid(const MatrixField& f) {
  f.require_spectral("to_grid");
  MatrixField out = f;
  auto vals = detail::inverse_components(f.spectral_, f.grid_, f.rows_ * f.cols_);
  double max_re = 0.0, max_im = 0.0;
  for (const cplx& z : vals) {
    max_re = std::max(max_re, std::abs(z.real()));
    max_im = std::max(max_im, std::abs(z.imag()));
  }
  if (max_im > 1e-10 * std::max(max_re, 1e-300))
    throw NumericError("to_grid: conjugate symmetry violated (imaginary residue " +
                       std::to_string(max_im / std::max(max_re, 1e-300)) + " relative)");
  out.values_.resize(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) out.values_[i] = vals[i].real();
  out.grid_valid_ = true;
  return out;
}

// theta -> field(theta + delta). FourierDiag/SpectralOnly multiply coeff(k)
// by e^{2 pi i k.delta}; the unpaired Nyquist mode is treated as a cosine so
// real fields stay real. GridInterp uses the periodic Lagrange stencil, which
// has fixed weights because delta is the same for every node.
inline MatrixField shift(const MatrixField& f, const RotationVector& delta, ShiftStrategy strategy,
                         int order = 3) {
  if (delta.ell() != f.grid().ell()) throw ConfigError("shift: delta dimension mismatch");
  const std::size_t comps = f.rows_ * f.cols_;
  if (strategy == ShiftStrategy::GridInterp) {
    f.require_grid("shift(GridInterp)");
    if (order != 1 && order != 3) throw ConfigError("shift: interpolation order must be 1 or 3");
    MatrixField out(f.grid_, f.rows_, f.cols_);
    const std::size_t ell = f.grid_.ell();
    // Per-axis integer offset and stencil weights.
    std::vector<long long> base(ell);
    std::vector<std::array<double, 4>> w(ell);
    std::vector<int> taps(ell, order == 3 ? 4 : 2);
    for (std::size_t a = 0; a < ell; ++a) {
      const double t = delta.omega[a] * static_cast<double>(f.grid_.sizes[a]);
      const double fl = std::floor(t);
      const double u = t - fl;
      base[a] = static_cast<long long>(fl);
      if (order == 3) {
        w[a] = detail::cubic_weights(u);
      } else {
        w[a] = {1.0 - u, u, 0.0, 0.0};
      }
    }
    const std::size_t n = f.grid_.total();
    parallel_for(n, [&](std::size_t j) {
      auto mi = f.grid_.unflatten(j);
      // Tensor-product stencil walk.
      std::vector<int> tap(ell, 0);
      std::vector<std::size_t> src(ell);
      while (true) {
        double weight = 1.0;
        for (std::size_t a = 0; a < ell; ++a) {
          const auto n_a = static_cast<long long>(f.grid_.sizes[a]);
          long long idx = static_cast<long long>(mi[a]) + base[a] + tap[a] - (order == 3 ? 1 : 0);
          idx %= n_a;
          if (idx < 0) idx += n_a;
          src[a] = static_cast<std::size_t>(idx);
          weight *= w[a][static_cast<std::size_t>(tap[a])];
        }
        const std::size_t sj = f.grid_.flatten(src);
        for (std::size_t e = 0; e < comps; ++e)
          out.values_[j * comps + e] += weight * f.values_[sj * comps + e];
        std::size_t a = 0;
        for (; a < ell; ++a) {
          if (++tap[a] < taps[a]) break;
          tap[a] = 0;
        }
        if (a == ell) break;
      }
    });
    return out;
  }

  // Fourier branch.
  const MatrixField* src = &f;
  MatrixField tmp;
  if (!f.spectral_valid_) {
    if (strategy == ShiftStrategy::SpectralOnly) f.require_spectral("shift(SpectralOnly)");
    tmp = to_spectral(f);
    src = &tmp;
  }
  MatrixField out = *src;
  const std::size_t n = out.grid_.total();
  const std::size_t ell = out.grid_.ell();
  for (std::size_t j = 0; j < n; ++j) {
    auto mi = out.grid_.unflatten(j);
    double phase = 0.0;
    double nyq = 1.0;
    for (std::size_t a = 0; a < ell; ++a) {
      const std::size_t n_a = out.grid_.sizes[a];
      if (n_a > 1 && mi[a] == n_a / 2) {
        nyq *= std::cos(std::numbers::pi * static_cast<double>(n_a) * delta.omega[a]);
      } else {
        phase += static_cast<double>(GridSpec::freq_of_slot(mi[a], n_a)) * delta.omega[a];
      }
    }
    const cplx factor = nyq * std::exp(cplx(0.0, 2.0 * std::numbers::pi * phase));
    for (std::size_t e = 0; e < comps; ++e) out.spectral_[j * comps + e] *= factor;
  }
  out.grid_valid_ = false;
  if (strategy == ShiftStrategy::SpectralOnly) return out;
  return to_grid(out);
}

// theta -> A(theta) B(theta). Grid multiplies node by node; CauchySpectral
// convolves coefficients, truncated to the representable band. antialias=true
// computes the linear convolution over true integer frequencies (equivalent
// to 2x zero padding); false wraps indices mod N (circular convolution).
inline MatrixField pointwise_product(const MatrixField& A, const MatrixField& B, ProductStrategy strategy,
                                     bool antialias = true) {
  if (A.grid_ != B.grid_) throw ConfigError("pointwise_product: grid mismatch");
  if (A.cols_ != B.rows_) throw ConfigError("pointwise_product: matrix dimension mismatch");
  const std::size_t n = A.grid_.total();
  if (strategy == ProductStrategy::Grid) {
    A.require_grid("pointwise_product(Grid)");
    B.require_grid("pointwise_product(Grid)");
    MatrixField out(A.grid_, A.rows_, B.cols_);
    parallel_for(n, [&](std::size_t j) { out.mat(j).noalias() = A.mat(j) * B.mat(j); });
    return out;
  }
  A.require_spectral("pointwise_product(CauchySpectral)");
  B.require_spectral("pointwise_product(CauchySpectral)");
  const std::size_t ell = A.grid_.ell();
  MatrixField out(A.grid_, A.rows_, B.cols_);
  out.grid_valid_ = false;
  out.spectral_valid_ = true;
  out.spectral_.assign(n * A.rows_ * B.cols_, cplx(0.0));
  const std::size_t ra = A.rows_, ca = A.cols_, cb = B.cols_;
  parallel_for(n, [&](std::size_t jo) {
    auto ko = A.grid_.unflatten(jo);  // output slot
    std::vector<long long> kfo(ell);
    std::vector<std::size_t> nyq_axes;
    for (std::size_t a = 0; a < ell; ++a) {
      kfo[a] = GridSpec::freq_of_slot(ko[a], A.grid_.sizes[a]);
      if (A.grid_.sizes[a] > 1 && ko[a] == A.grid_.sizes[a] / 2) nyq_axes.push_back(a);
    }
    std::vector<std::size_t> kb(ell);
    cplx* acc = out.spectral_.data() + jo * ra * cb;
    // A stored Nyquist slot holds the cos(pi N theta) amplitude: half weight
    // at each of the +-N/2 true frequencies. The linear convolution must run
    // over true frequencies, so Nyquist slots on either input contribute with
    // weight 1/2 per interpretation; anything else would break the Hermitian
    // symmetry of the product of two real fields.
    auto accumulate = [&](const std::vector<long long>& kf) {
      for (std::size_t ja = 0; ja < n; ++ja) {
        auto ka = A.grid_.unflatten(ja);
        std::vector<std::size_t> a_nyq;
        for (std::size_t a = 0; a < ell; ++a)
          if (antialias && A.grid_.sizes[a] > 1 && ka[a] == A.grid_.sizes[a] / 2)
            a_nyq.push_back(a);
        const std::size_t a_combos = std::size_t{1} << a_nyq.size();
        for (std::size_t abits = 0; abits < a_combos; ++abits) {
          bool in_band = true;
          double weight = 1.0;
          for (std::size_t a = 0; a < ell && in_band; ++a) {
            const auto n_a = static_cast<long long>(A.grid_.sizes[a]);
            long long ka_true = GridSpec::freq_of_slot(ka[a], A.grid_.sizes[a]);
            if (antialias && n_a > 1 && ka[a] == A.grid_.sizes[a] / 2) {
              std::size_t i = 0;
              while (a_nyq[i] != a) ++i;
              ka_true = (abits >> i) & 1 ? n_a / 2 : -n_a / 2;
              weight *= 0.5;
            }
            long long kd = kf[a] - ka_true;
            if (antialias) {
              if (kd < -n_a / 2 || kd > n_a / 2) {
                in_band = false;
                break;
              }
              if (n_a > 1 && (kd == n_a / 2 || kd == -n_a / 2)) weight *= 0.5;
              if (kd == n_a / 2) kd = -n_a / 2;
            } else {
              kd %= n_a;
            }
            if (kd < 0) kd += n_a;
            kb[a] = static_cast<std::size_t>(kd);
          }
          if (!in_band) continue;
          const std::size_t jb = A.grid_.flatten(kb);
          const cplx* am = A.spectral_.data() + ja * ra * ca;
          const cplx* bm = B.spectral_.data() + jb * ca * cb;
          for (std::size_t r = 0; r < ra; ++r)
            for (std::size_t k = 0; k < ca; ++k) {
              const cplx av = weight * am[r * ca + k];
              for (std::size_t c = 0; c < cb; ++c) acc[r * cb + c] += av * bm[k * cb + c];
            }
        }
      }
    };
    if (!antialias || nyq_axes.empty()) {
      accumulate(kfo);
    } else {
      // An output Nyquist slot carries every +-N/2 interpretation of itself;
      // sum them all so the stored coefficient matches the real grid signal.
      std::vector<long long> kf = kfo;
      const std::size_t combos = std::size_t{1} << nyq_axes.size();
      for (std::size_t bits = 0; bits < combos; ++bits) {
        for (std::size_t i = 0; i < nyq_axes.size(); ++i) {
          const std::size_t a = nyq_axes[i];
          const auto n_a = static_cast<long long>(A.grid_.sizes[a]);
          kf[a] = (bits >> i) & 1 ? n_a / 2 : -n_a / 2;
        }
        accumulate(kf);
      }
    }
  });
  return out;
}

// Point evaluation: trigonometric sum when coefficients are available, else
// periodic polynomial interpolation from the grid.
inline MatrixRM evaluate(const MatrixField& f, std::span<const double> theta, int order = 3) {
  if (theta.size() != f.grid().ell()) throw ConfigError("evaluate: point dimension mismatch");
  const std::size_t ell = f.grid().ell();
  MatrixRM result = MatrixRM::Zero(static_cast<Eigen::Index>(f.rows()), static_cast<Eigen::Index>(f.cols()));
  if (f.has_spectral()) {
    const std::size_t n = f.nodes();
    for (std::size_t j = 0; j < n; ++j) {
      auto mi = f.grid().unflatten(j);
      double phase = 0.0;
      for (std::size_t a = 0; a < ell; ++a)
        phase += static_cast<double>(GridSpec::freq_of_slot(mi[a], f.grid().sizes[a])) * theta[a];
      const cplx e = std::exp(cplx(0.0, 2.0 * std::numbers::pi * phase));
      for (std::size_t r = 0; r < f.rows(); ++r)
        for (std::size_t c = 0; c < f.cols(); ++c)
          result(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) +=
              (f.coeff_slot(j, r, c) * e).real();
    }
    return result;
  }
  f.require_grid("evaluate");
  if (order != 1 && order != 3) throw ConfigError("evaluate: interpolation order must be 1 or 3");
  const int taps = order == 3 ? 4 : 2;
  std::vector<long long> base(ell);
  std::vector<std::array<double, 4>> w(ell);
  for (std::size_t a = 0; a < ell; ++a) {
    const double t = mod1(theta[a]) * static_cast<double>(f.grid().sizes[a]);
    const double fl = std::floor(t);
    base[a] = static_cast<long long>(fl);
    const double u = t - fl;
    w[a] = order == 3 ? detail::cubic_weights(u) : std::array<double, 4>{1.0 - u, u, 0.0, 0.0};
  }
  std::vector<int> tap(ell, 0);
  std::vector<std::size_t> src(ell);
  while (true) {
    double weight = 1.0;
    for (std::size_t a = 0; a < ell; ++a) {
      const auto n_a = static_cast<long long>(f.grid().sizes[a]);
      long long idx = base[a] + tap[a] - (order == 3 ? 1 : 0);
      idx %= n_a;
      if (idx < 0) idx += n_a;
      src[a] = static_cast<std::size_t>(idx);
      weight *= w[a][static_cast<std::size_t>(tap[a])];
    }
    const std::size_t sj = f.grid().flatten(src);
    for (std::size_t r = 0; r < f.rows(); ++r)
      for (std::size_t c = 0; c < f.cols(); ++c)
        result(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += weight * f.value(sj, r, c);
    std::size_t a = 0;
    for (; a < ell; ++a) {
      if (++tap[a] < taps) break;
      tap[a] = 0;
    }
    if (a == ell) break;
  }
  return result;
}

inline MatrixRM evaluate(const MatrixField& f, std::initializer_list<double> theta, int order = 3) {
  return evaluate(f, std::span<const double>(theta.begin(), theta.size()), order);
}

// Mean of a scalar field over the grid.
inline double field_average(const ScalarField& f) {
  f.require_grid("field_average");
  double s = 0.0;
  for (std::size_t j = 0; j < f.nodes(); ++j) s += f.value(j, 0, 0);
  return s / static_cast<double>(f.nodes());
}

}  // namespace cocycle
