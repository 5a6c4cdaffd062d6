#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cocycle/field.hpp"

namespace cocycle {

struct SmallDivisorDiagnostics {
  double min_divisor = 0.0;  // smallest |e^{2 pi i k.w} - 1| over retained modes
  std::vector<std::vector<long long>> dropped_modes;
  double threshold = 1e-10;
};

struct CohomologicalSolution {
  ScalarField g;
  double average = 0.0;
  SmallDivisorDiagnostics diagnostics;
};

struct SolveOptions {
  double divisor_floor = 1e-10;     // drop modes whose divisor is below this
  double drop_coeff_limit = 1e-8;   // dropped modes above this are a resonance failure
};

// Solve g(th + w) - g(th) = f(th) - avg(f) mode by mode:
// g^(k) = f^(k) / (e^{2 pi i k.w} - 1), g^(0) = 0. Unpaired Nyquist modes
// cannot be solved in a real field and are dropped like resonant ones.
inline CohomologicalSolution solve_cohomological(const ScalarField& f, const RotationVector& omega,
                                                 const SolveOptions& opts = {}) {
  if (f.rows() != 1 || f.cols() != 1) throw ConfigError("solve_cohomological: scalar field required");
  if (omega.ell() != f.grid().ell()) throw ConfigError("solve_cohomological: omega dimension mismatch");
  ScalarField fs = f.has_spectral() ? f : to_spectral(f);
  if (!fs.all_finite()) throw ConfigError("solve_cohomological: non-finite input");

  const auto& g = fs.grid();
  const std::size_t n = g.total();
  std::vector<cplx> coeffs(n, cplx(0.0));
  CohomologicalSolution out;
  out.diagnostics.threshold = opts.divisor_floor;
  out.diagnostics.min_divisor = 2.0;  // divisors are bounded by 2
  out.average = fs.coeff_slot(0, 0, 0).real();

  for (std::size_t j = 1; j < n; ++j) {
    auto mi = g.unflatten(j);
    double phase = 0.0;
    bool nyquist = false;
    for (std::size_t a = 0; a < g.ell(); ++a) {
      if (g.sizes[a] > 1 && mi[a] == g.sizes[a] / 2) nyquist = true;
      phase += static_cast<double>(GridSpec::freq_of_slot(mi[a], g.sizes[a])) * omega.omega[a];
    }
    const cplx divisor = std::exp(cplx(0.0, 2.0 * std::numbers::pi * phase)) - 1.0;
    const cplx fc = fs.coeff_slot(j, 0, 0);
    if (nyquist || std::abs(divisor) < opts.divisor_floor) {
      if (std::abs(fc) > opts.drop_coeff_limit) {
        std::string which;
        for (std::size_t a = 0; a < g.ell(); ++a)
          which += (a ? "," : "") + std::to_string(GridSpec::freq_of_slot(mi[a], g.sizes[a]));
        throw ResonanceError("solve_cohomological: mode (" + which + ") has divisor " +
                             std::to_string(std::abs(divisor)) + " below floor but coefficient " +
                             std::to_string(std::abs(fc)));
      }
      std::vector<long long> k(g.ell());
      for (std::size_t a = 0; a < g.ell(); ++a) k[a] = GridSpec::freq_of_slot(mi[a], g.sizes[a]);
      out.diagnostics.dropped_modes.push_back(std::move(k));
      continue;
    }
    out.diagnostics.min_divisor = std::min(out.diagnostics.min_divisor, std::abs(divisor));
    coeffs[j] = fc / divisor;
  }
  out.g = to_grid(ScalarField::from_spectral(g, 1, 1, std::move(coeffs)));
  return out;
}

enum class SignCharacter { Plus, Minus };

struct ReducedForm {
  double mu = 0.0;
  ScalarField p;  // strictly positive, geometric mean 1
  SignCharacter sign_character = SignCharacter::Plus;
  SmallDivisorDiagnostics diagnostics;
};

// Reduce lambda(th) p(th) = mu p(th + w) to a constant: log mu is the average
// of log|lambda| and log p solves the cohomological equation
//   g(th + w) - g(th) = log|lambda|(th) - log mu.
inline ReducedForm reduce_rank1(const ScalarField& lambda, const RotationVector& omega,
                                const SolveOptions& opts = {}) {
  lambda.require_grid("reduce_rank1");
  const std::size_t n = lambda.nodes();
  const double first = lambda.value(0, 0, 0);
  for (std::size_t j = 0; j < n; ++j) {
    const double v = lambda.value(j, 0, 0);
    if (std::abs(v) < 1e-12)
      throw NumericError("reduce_rank1: |lambda| below 1e-12 at node " + std::to_string(j));
    if (v * first < 0.0)
      throw NumericError("reduce_rank1: lambda changes sign across nodes; reduction needs a "
                         "constant-sign multiplier");
  }
  ScalarField log_abs(lambda.grid(), 1);
  for (std::size_t j = 0; j < n; ++j) log_abs.value(j, 0, 0) = std::log(std::abs(lambda.value(j, 0, 0)));

  CohomologicalSolution sol = solve_cohomological(log_abs, omega, opts);
  ReducedForm out;
  out.sign_character = first > 0.0 ? SignCharacter::Plus : SignCharacter::Minus;
  out.mu = (first > 0.0 ? 1.0 : -1.0) * std::exp(sol.average);
  out.diagnostics = std::move(sol.diagnostics);
  out.p = ScalarField(lambda.grid(), 1);
  for (std::size_t j = 0; j < n; ++j) out.p.value(j, 0, 0) = std::exp(sol.g.value(j, 0, 0));
  return out;
}

}  // namespace cocycle
