#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "cocycle/field.hpp"

namespace cocycle {
namespace gen {

inline MatrixField make_constant(const Eigen::MatrixXd& A, const GridSpec& grid) {
  if (!A.allFinite()) throw ConfigError("make_constant: non-finite matrix");
  MatrixField f(grid, static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(A.cols()));
  for (std::size_t j = 0; j < f.nodes(); ++j) f.mat(j) = A;
  return f;
}

// Transfer matrix of the discrete Schroedinger / almost-Mathieu operator:
// M(th) = [[E - 2 c cos(2 pi th), -1], [1, 0]], det = 1 everywhere.
inline MatrixField make_schrodinger(double energy, double coupling, const GridSpec& grid) {
  if (grid.ell() != 1) throw ConfigError("make_schrodinger: requires ell = 1");
  MatrixField f(grid, 2);
  for (std::size_t j = 0; j < f.nodes(); ++j) {
    const double theta = grid.node(j)[0];
    auto m = f.mat(j);
    m(0, 0) = energy - 2.0 * coupling * std::cos(2.0 * std::numbers::pi * theta);
    m(0, 1) = -1.0;
    m(1, 0) = 1.0;
    m(1, 1) = 0.0;
  }
  return f;
}

inline Eigen::Matrix2d planar_rotation(double angle) {
  Eigen::Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

// Smooth orientable change of frame: Q(th) = rotation by 2 pi amp sin(2 pi th).
inline MatrixField make_rotation_frame(double amplitude, const GridSpec& grid) {
  if (grid.ell() != 1) throw ConfigError("make_rotation_frame: requires ell = 1");
  MatrixField f(grid, 2);
  for (std::size_t j = 0; j < f.nodes(); ++j) {
    const double theta = grid.node(j)[0];
    f.mat(j) = planar_rotation(2.0 * std::numbers::pi * amplitude *
                               std::sin(2.0 * std::numbers::pi * theta));
  }
  return f;
}

// M(th) = Q(th + w) A Q(th)^-1 with the rotation frame above, so that
// preconditioning by Q recovers the constant A exactly.
inline MatrixField make_conjugated_constant(const Eigen::Matrix2d& A, double frame_amplitude,
                                            const RotationVector& omega, const GridSpec& grid) {
  if (grid.ell() != 1 || omega.ell() != 1)
    throw ConfigError("make_conjugated_constant: requires ell = 1");
  if (!A.allFinite()) throw ConfigError("make_conjugated_constant: non-finite matrix");
  MatrixField f(grid, 2);
  for (std::size_t j = 0; j < f.nodes(); ++j) {
    const double theta = grid.node(j)[0];
    const double ang0 = 2.0 * std::numbers::pi * frame_amplitude * std::sin(2.0 * std::numbers::pi * theta);
    const double ang1 = 2.0 * std::numbers::pi * frame_amplitude *
                        std::sin(2.0 * std::numbers::pi * mod1(theta + omega.scalar()));
    f.mat(j) = planar_rotation(ang1) * A * planar_rotation(-ang0);
  }
  return f;
}

// M(th) = R(pi(th + w)) diag(a, 1/a) R(pi th)^-1: the invariant line turns by
// half a revolution over one torus loop, so the unstable bundle is
// non-orientable. Used as the straddle stress case.
inline MatrixField make_nonorientable(double a, const RotationVector& omega, const GridSpec& grid) {
  if (grid.ell() != 1 || omega.ell() != 1) throw ConfigError("make_nonorientable: requires ell = 1");
  if (!(a > 1.0)) throw ConfigError("make_nonorientable: requires a > 1");
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  A(0, 0) = a;
  A(1, 1) = 1.0 / a;
  MatrixField f(grid, 2);
  for (std::size_t j = 0; j < f.nodes(); ++j) {
    const double theta = grid.node(j)[0];
    f.mat(j) = planar_rotation(std::numbers::pi * (theta + omega.scalar())) * A *
               planar_rotation(-std::numbers::pi * theta);
  }
  return f;
}

// A + eps * band-limited pseudorandom trig perturbation with sup-norm 1,
// band capped at a quarter of the grid so Fourier shifts stay exact.
inline MatrixField make_near_constant(const Eigen::MatrixXd& A, double epsilon, std::uint64_t seed,
                                      const GridSpec& grid) {
  if (epsilon < 0.0) throw ConfigError("make_near_constant: epsilon must be >= 0");
  const auto d = static_cast<std::size_t>(A.rows());
  if (A.rows() != A.cols()) throw ConfigError("make_near_constant: square matrix required");
  MatrixField base = make_constant(A, grid);
  if (epsilon == 0.0) return base;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = grid.total();
  std::vector<cplx> coeffs(n * d * d, cplx(0.0));
  // Fill k with all components in [1, N_a/4] or negative mirror; assign
  // conjugate pairs so the field is real.
  for (std::size_t j = 0; j < n; ++j) {
    auto mi = grid.unflatten(j);
    bool in_band = true;
    int lead = 0;  // sign of the first nonzero component decides the half
    for (std::size_t a = 0; a < grid.ell(); ++a) {
      const long long k = GridSpec::freq_of_slot(mi[a], grid.sizes[a]);
      const long long cap = static_cast<long long>(grid.sizes[a] / 4);
      if (std::llabs(k) > cap) in_band = false;
      if (lead == 0 && k != 0) lead = k > 0 ? 1 : -1;
    }
    if (!in_band || lead != 1) continue;
    // mirror slot
    std::vector<std::size_t> mirror(grid.ell());
    for (std::size_t a = 0; a < grid.ell(); ++a)
      mirror[a] = mi[a] == 0 ? 0 : grid.sizes[a] - mi[a];
    const std::size_t jm = grid.flatten(mirror);
    for (std::size_t e = 0; e < d * d; ++e) {
      const cplx c(gauss(rng), gauss(rng));
      coeffs[j * d * d + e] = c;
      coeffs[jm * d * d + e] = std::conj(c);
    }
  }
  MatrixField pert = to_grid(MatrixField::from_spectral(grid, d, d, std::move(coeffs)));
  const double sup = pert.sup_norm();
  if (sup > 0.0) pert.scale(sup);
  MatrixField out(grid, d);
  for (std::size_t j = 0; j < n; ++j) out.mat(j) = base.mat(j) + epsilon * pert.mat(j);
  return out;
}

}  // namespace gen
}  // namespace cocycle
