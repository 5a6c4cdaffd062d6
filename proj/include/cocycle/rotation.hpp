#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cocycle/errors.hpp"

namespace cocycle {

inline double mod1(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r -= 1.0;  // floor rounding at the seam
  return r;
}

// Frequency vector omega in [0,1)^ell driving the rotation T_omega.
struct RotationVector {
  std::vector<double> omega;

  RotationVector() = default;
  explicit RotationVector(std::vector<double> w) : omega(std::move(w)) {
    if (omega.empty()) throw ConfigError("RotationVector: dimension must be >= 1");
    for (double& x : omega) {
      if (!std::isfinite(x)) throw ConfigError("RotationVector: non-finite component");
      x = mod1(x);
    }
  }
  static RotationVector dim1(double w) { return RotationVector(std::vector<double>{w}); }

  std::size_t ell() const { return omega.size(); }
  double scalar() const { return omega.at(0); }

  RotationVector doubled() const {
    std::vector<double> w(omega);
    for (double& x : w) x = mod1(2.0 * x);
    return RotationVector(std::move(w));
  }
  RotationVector scaled(double c) const {
    std::vector<double> w(omega);
    for (double& x : w) x = mod1(c * x);
    return RotationVector(std::move(w));
  }
  RotationVector plus(const RotationVector& o) const {
    std::vector<double> w(omega);
    for (std::size_t a = 0; a < w.size(); ++a) w[a] = mod1(w[a] + o.omega.at(a));
    return RotationVector(std::move(w));
  }
  RotationVector negated() const {
    std::vector<double> w(omega);
    for (double& x : w) x = mod1(-x);
    return RotationVector(std::move(w));
  }

  // 2^k * omega mod 1 without losing low bits: double the fractional part
  // componentwise, dropping the integer part each time.
  RotationVector doubled_k(int k) const {
    RotationVector r = *this;
    for (int i = 0; i < k; ++i) r = r.doubled();
    return r;
  }
};

// Continued fraction expansion of a scalar frequency, with convergents by
// the recurrence q_n = a_n q_{n-1} + q_{n-2}, q_1 = a_1, q_0 = 1.
struct ContinuedFraction {
  std::vector<std::uint64_t> a;  // partial quotients a_1..a_m
  std::vector<std::uint64_t> p;  // numerators, aligned with a (p[i] ~ p_{i+1})
  std::vector<std::uint64_t> q;  // denominators
  bool rational_truncated = false;

  std::size_t levels() const { return a.size(); }
};

inline ContinuedFraction continued_fraction_expand(double omega, std::size_t m) {
  if (!(omega > 0.0 && omega < 1.0)) throw ConfigError("continued_fraction_expand: omega must be in (0,1)");
  if (m < 1) throw ConfigError("continued_fraction_expand: m must be >= 1");
  ContinuedFraction cf;
  double x = omega;
  // p_{-1}=1, p_0=0, q_{-1}=0, q_0=1 so that p_n/q_n = [a_1..a_n].
  std::uint64_t p_prev = 1, p_cur = 0;
  std::uint64_t q_prev = 0, q_cur = 1;
  for (std::size_t i = 0; i < m; ++i) {
    double inv = 1.0 / x;
    auto ai = static_cast<std::uint64_t>(std::floor(inv));
    if (ai < 1) ai = 1;
    cf.a.push_back(ai);
    std::uint64_t pn = ai * p_cur + p_prev;
    std::uint64_t qn = ai * q_cur + q_prev;
    p_prev = p_cur; p_cur = pn;
    q_prev = q_cur; q_cur = qn;
    cf.p.push_back(pn);
    cf.q.push_back(qn);
    double rem = inv - static_cast<double>(ai);
    if (rem < 1e-14) {  // rational to machine precision
      cf.rational_truncated = true;
      break;
    }
    x = rem;
  }
  return cf;
}

inline constexpr double kGoldenMean = 0.6180339887498948482;  // (sqrt(5)-1)/2
inline constexpr double kSilverMean = 0.4142135623730950488;  // sqrt(2)-1

}  // namespace cocycle
