#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "cocycle/field.hpp"
#include "cocycle/rotation.hpp"

namespace cocycle {

// The three discretization strategies for one renormalization step: how the
// shifted factor is obtained and how the pointwise product is formed.
enum class IterationStrategy { GridInterp, FourierDiag, Spectral };

inline IterationStrategy parse_strategy(const std::string& s) {
  if (s == "grid" || s == "GridInterp") return IterationStrategy::GridInterp;
  if (s == "fourier" || s == "FourierDiag") return IterationStrategy::FourierDiag;
  if (s == "spectral" || s == "Spectral") return IterationStrategy::Spectral;
  throw ConfigError("unknown strategy '" + s + "' (field: strategy; expected grid|fourier|spectral)");
}

struct IterationResult {
  MatrixField generator;
  RotationVector omega_eff;
  std::uint64_t steps_n = 1;
  double log_scale = 0.0;
};

struct StepDiagnostics {
  int step = 0;
  double log_scale_increment = 0.0;
  double sup_norm = 0.0;
  double wall_seconds = 0.0;
};
using DiagnosticsSink = std::function<void(const StepDiagnostics&)>;

// Explicit evaluate-and-multiply iteration, O(n). This is the oracle every
// fast path is checked against; it must stay independent of them.
inline MatrixRM direct_cocycle(const MatrixField& M, const RotationVector& omega, long long n,
                               std::span<const double> theta) {
  const auto d = static_cast<Eigen::Index>(M.dim());
  MatrixRM acc = MatrixRM::Identity(d, d);
  if (n == 0) return acc;
  std::vector<double> point(theta.begin(), theta.end());
  if (n > 0) {
    for (long long j = 0; j < n; ++j) {
      for (std::size_t a = 0; a < point.size(); ++a)
        point[a] = mod1(theta[a] + static_cast<double>(j) * omega.omega[a]);
      acc = evaluate(M, std::span<const double>(point)) * acc;
    }
    return acc;
  }
  // M(-p, theta) = M(theta - p w)^-1 ... M(theta - w)^-1
  const long long p = -n;
  for (long long j = 1; j <= p; ++j) {
    for (std::size_t a = 0; a < point.size(); ++a)
      point[a] = mod1(theta[a] - static_cast<double>(j) * omega.omega[a]);
    MatrixRM sample = evaluate(M, std::span<const double>(point));
    Eigen::FullPivLU<MatrixRM> lu(sample);
    if (!lu.isInvertible())
      throw NumericError("direct_cocycle: singular sample at step " + std::to_string(-j));
    acc = lu.inverse() * acc;
  }
  return acc;
}

inline MatrixRM direct_cocycle(const MatrixField& M, const RotationVector& omega, long long n,
                               std::initializer_list<double> theta) {
  return direct_cocycle(M, omega, n, std::span<const double>(theta.begin(), theta.size()));
}

// Direct iteration with per-step renormalization: returns the product scaled
// to unit Frobenius norm together with the factored-out log. Usable far past
// the overflow horizon of the plain oracle; still O(n) and independent of the
// renormalization paths.
struct ScaledMatrix {
  MatrixRM normalized;
  double log_norm = 0.0;
};

inline ScaledMatrix direct_cocycle_scaled(const MatrixField& M, const RotationVector& omega,
                                          long long n, std::span<const double> theta) {
  if (n < 0) throw ConfigError("direct_cocycle_scaled: n must be >= 0");
  const auto d = static_cast<Eigen::Index>(M.dim());
  ScaledMatrix out{MatrixRM::Identity(d, d), 0.0};
  std::vector<double> point(theta.begin(), theta.end());
  for (long long j = 0; j < n; ++j) {
    for (std::size_t a = 0; a < point.size(); ++a)
      point[a] = mod1(theta[a] + static_cast<double>(j) * omega.omega[a]);
    out.normalized = evaluate(M, std::span<const double>(point)) * out.normalized;
    const double s = out.normalized.norm();
    if (!(s > 0.0) || !std::isfinite(s))
      throw NumericError("direct_cocycle_scaled: degenerate product at step " + std::to_string(j));
    out.normalized /= s;
    out.log_norm += std::log(s);
  }
  return out;
}

inline ScaledMatrix direct_cocycle_scaled(const MatrixField& M, const RotationVector& omega,
                                          long long n, std::initializer_list<double> theta) {
  return direct_cocycle_scaled(M, omega, n, std::span<const double>(theta.begin(), theta.size()));
}

// Log-magnitude + normalized-direction discrepancy between two scaled
// iterates; the standard comparison wherever plain norms would overflow.
inline double scaled_relative_error(const ScaledMatrix& a, const ScaledMatrix& b) {
  const double na = a.normalized.norm();
  const double nb = b.normalized.norm();
  const double dir = (a.normalized / na - b.normalized / nb).norm();
  const double mag = std::abs((a.log_norm + std::log(na)) - (b.log_norm + std::log(nb)));
  return std::max(dir, mag);
}

namespace detail {

inline MatrixField ensure_for_strategy(const MatrixField& M, IterationStrategy strategy) {
  switch (strategy) {
    case IterationStrategy::GridInterp:
      return M.has_grid() ? M : to_grid(M);
    case IterationStrategy::FourierDiag:
      return M.has_spectral() ? (M.has_grid() ? M : to_grid(M)) : to_spectral(M);
    case IterationStrategy::Spectral:
      return M.has_spectral() ? M : to_spectral(M);
  }
  throw ConfigError("ensure_for_strategy: bad strategy");
}

inline std::size_t first_nonfinite_node(const MatrixField& f) {
  for (std::size_t j = 0; j < f.nodes(); ++j)
    for (std::size_t r = 0; r < f.rows(); ++r)
      for (std::size_t c = 0; c < f.cols(); ++c)
        if (!std::isfinite(f.value(j, r, c))) return j;
  return f.nodes();
}

// One doubling of the generator field: returns shift(M, w) * M in the
// representation the strategy dictates, grid representation always present.
inline MatrixField doubled_generator(const MatrixField& M, const RotationVector& omega,
                                     IterationStrategy strategy) {
  MatrixField src = ensure_for_strategy(M, strategy);
  switch (strategy) {
    case IterationStrategy::GridInterp:
      return pointwise_product(shift(src, omega, ShiftStrategy::GridInterp), src, ProductStrategy::Grid);
    case IterationStrategy::FourierDiag:
      return pointwise_product(shift(src, omega, ShiftStrategy::FourierDiag), src, ProductStrategy::Grid);
    case IterationStrategy::Spectral: {
      MatrixField prod = pointwise_product(shift(src, omega, ShiftStrategy::SpectralOnly), src,
                                           ProductStrategy::CauchySpectral);
      return to_grid(prod);  // grid values needed for scaling and readout
    }
  }
  throw ConfigError("doubled_generator: bad strategy");
}

}  // namespace detail

inline IterationResult initial_state(const MatrixField& M, const RotationVector& omega) {
  return IterationResult{M, omega, 1, 0.0};
}

// Algorithm: replace (M, w) by (M(.+w) M(.), 2w). Scaling divides by the
// global max absolute entry so hyperbolic growth stays representable.
inline IterationResult double_step(const IterationResult& state, IterationStrategy strategy,
                                   bool scaling) {
  IterationResult next;
  next.generator = detail::doubled_generator(state.generator, state.omega_eff, strategy);
  next.omega_eff = state.omega_eff.doubled();
  next.steps_n = state.steps_n * 2;
  next.log_scale = 2.0 * state.log_scale;
  if (scaling) {
    const double s = next.generator.sup_norm();
    if (s > 0.0 && std::isfinite(s)) {
      next.generator.scale(s);
      next.log_scale += std::log(s);
    }
  }
  if (!next.generator.all_finite()) {
    const std::size_t node = detail::first_nonfinite_node(next.generator);
    throw NumericError("double_step: non-finite entry at node " + std::to_string(node) +
                       (scaling ? "" : " (scaling disabled)"));
  }
  return next;
}

inline IterationResult double_step(const MatrixField& M, const RotationVector& omega,
                                   IterationStrategy strategy, bool scaling) {
  return double_step(initial_state(M, omega), strategy, scaling);
}

// k doublings: 2^k cocycle steps at cost k C(N).
inline IterationResult iterate_fast(const MatrixField& M, const RotationVector& omega, int k,
                                    IterationStrategy strategy, bool scaling,
                                    const DiagnosticsSink& sink = nullptr) {
  if (k < 0) throw ConfigError("iterate_fast: k must be >= 0");
  IterationResult state = initial_state(M, omega);
  for (int i = 0; i < k; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const double prev_log = state.log_scale;
    try {
      state = double_step(state, strategy, scaling);
    } catch (const NumericError& e) {
      throw NumericError("iterate_fast: step " + std::to_string(i + 1) + ": " + e.what());
    }
    if (sink) {
      const auto t1 = std::chrono::steady_clock::now();
      StepDiagnostics d;
      d.step = i + 1;
      d.log_scale_increment = state.log_scale - 2.0 * prev_log;
      d.sup_norm = state.generator.has_grid() ? state.generator.sup_norm() : 0.0;
      d.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
      sink(d);
    }
  }
  return state;
}

// Continued-fraction iteration for ell = 1: level n represents q_n cocycle
// steps, where q_n are the convergent denominators of omega. The level
// recurrence composes shifted copies of the previous level:
//   P_n(th) = [ prod_{j=a_n-1..0} P_{n-1}(th + (q_{n-2} + j q_{n-1}) w) ] P_{n-2}(th)
// with P_{-1} = Id (q=0) and P_0 = M (q=1).
inline IterationResult iterate_cf(const MatrixField& M, const RotationVector& omega, int n_levels,
                                  IterationStrategy strategy, bool scaling,
                                  std::uint64_t max_products_per_level = 1000000,
                                  const DiagnosticsSink& sink = nullptr) {
  if (omega.ell() != 1) throw ConfigError("iterate_cf: requires ell = 1");
  if (n_levels < 1) throw ConfigError("iterate_cf: n_levels must be >= 1");
  ContinuedFraction cf = continued_fraction_expand(omega.scalar(), static_cast<std::size_t>(n_levels));
  if (cf.levels() < static_cast<std::size_t>(n_levels))
    throw ConfigError("iterate_cf: expansion terminated (rational frequency) before requested level");

  const ShiftStrategy shift_strat = strategy == IterationStrategy::GridInterp ? ShiftStrategy::GridInterp
                                    : strategy == IterationStrategy::FourierDiag
                                        ? ShiftStrategy::FourierDiag
                                        : ShiftStrategy::SpectralOnly;
  const ProductStrategy prod_strat =
      strategy == IterationStrategy::Spectral ? ProductStrategy::CauchySpectral : ProductStrategy::Grid;

  const std::size_t d = M.dim();
  MatrixField prev2(M.grid(), d);  // P_{-1} = Id
  for (std::size_t j = 0; j < prev2.nodes(); ++j) prev2.mat(j).setIdentity();
  MatrixField prev = detail::ensure_for_strategy(M, strategy);  // P_0 = M
  if (strategy == IterationStrategy::Spectral) prev2 = to_spectral(prev2);
  std::uint64_t q_prev2 = 0, q_prev = 1;
  double log_prev2 = 0.0, log_prev = 0.0;

  for (int n = 1; n <= n_levels; ++n) {
    const std::uint64_t a_n = cf.a[static_cast<std::size_t>(n - 1)];
    if (a_n > max_products_per_level)
      throw ConfigError("iterate_cf: partial quotient a_" + std::to_string(n) + " = " +
                        std::to_string(a_n) + " exceeds the per-level product budget");
    const auto t0 = std::chrono::steady_clock::now();
    MatrixField acc = prev2;
    for (std::uint64_t j = 0; j < a_n; ++j) {
      const double delta = mod1(static_cast<double>(q_prev2 + j * q_prev) * omega.scalar());
      MatrixField factor = shift(prev, RotationVector::dim1(delta), shift_strat);
      try {
        acc = pointwise_product(factor, acc, prod_strat);
      } catch (const NumericError& e) {
        throw NumericError("iterate_cf: level " + std::to_string(n) + ": " + e.what());
      }
    }
    if (strategy == IterationStrategy::Spectral) acc = to_grid(acc);
    double log_acc = static_cast<double>(a_n) * log_prev + log_prev2;
    if (scaling) {
      const double s = acc.sup_norm();
      if (s > 0.0 && std::isfinite(s)) {
        acc.scale(s);
        log_acc += std::log(s);
      }
    }
    if (!acc.all_finite())
      throw NumericError("iterate_cf: non-finite entry at level " + std::to_string(n) +
                         ", node " + std::to_string(detail::first_nonfinite_node(acc)));
    const std::uint64_t q_n = a_n * q_prev + q_prev2;
    if (sink) {
      StepDiagnostics diag;
      diag.step = n;
      diag.log_scale_increment = log_acc - (static_cast<double>(a_n) * log_prev + log_prev2);
      diag.sup_norm = acc.sup_norm();
      diag.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      sink(diag);
    }
    prev2 = std::move(prev);
    prev = std::move(acc);
    log_prev2 = log_prev;
    log_prev = log_acc;
    q_prev2 = q_prev;
    q_prev = q_n;
  }

  IterationResult out;
  out.generator = std::move(prev);
  out.omega_eff = RotationVector::dim1(mod1(static_cast<double>(q_prev) * omega.scalar()));
  out.steps_n = q_prev;
  out.log_scale = log_prev;
  return out;
}

}  // namespace cocycle
