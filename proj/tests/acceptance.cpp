// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failures. Tolerances are pinned here and must not be loosened to make a
// criterion pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cocycle/cocycle.hpp"

using namespace cocycle;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
  std::printf("criterion %2d [%s] %s  %s\n", criterion, pass ? "PASS" : "FAIL", name,
              detail.c_str());
  if (!pass) ++g_failures;
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

Eigen::Matrix2d diag2(double a, double b) {
  Eigen::Matrix2d m;
  m << a, 0.0, 0.0, b;
  return m;
}

// ---------------------------------------------------------------------------
// 1. Doubling correctness: every generator kind, k = 1..10, N = 256, golden.
void criterion1() {
  const double t0 = now_seconds();
  GridSpec grid = GridSpec::dim1(256);
  RotationVector w = RotationVector::dim1(kGoldenMean);
  struct Case {
    const char* name;
    MatrixField field;
  };
  std::vector<Case> cases;
  cases.push_back({"constant", gen::make_constant(diag2(2.0, 0.5), grid)});
  cases.push_back({"schrodinger", gen::make_schrodinger(10.0, 2.0, grid)});
  cases.push_back(
      {"conjugated_constant", gen::make_conjugated_constant(diag2(3.0, 1.0 / 3.0), 0.2, w, grid)});
  cases.push_back({"nonorientable", gen::make_nonorientable(3.0, w, grid)});
  cases.push_back({"near_constant", gen::make_near_constant(diag2(2.0, 0.5), 1e-3, 5, grid)});

  double worst = 0.0;
  std::string worst_case;
  const std::size_t n_nodes = grid.total();
  for (auto& c : cases) {
    MatrixField M = to_spectral(c.field);
    std::vector<ScaledMatrix> direct(n_nodes, {Eigen::Matrix2d::Identity(), 0.0});
    std::uint64_t steps_done = 0;
    IterationResult state = initial_state(M, w);
    for (int k = 1; k <= 10; ++k) {
      state = double_step(state, IterationStrategy::FourierDiag, true);
      const std::uint64_t target = std::uint64_t{1} << k;
      for (std::uint64_t s = steps_done; s < target; ++s) {
        // M(. + s w) on the whole grid at once; exact for a band-limited field
        MatrixField Ms = shift(
            M, RotationVector::dim1(mod1(static_cast<double>(s) * w.scalar())),
            ShiftStrategy::FourierDiag);
        for (std::size_t j = 0; j < n_nodes; ++j) {
          direct[j].normalized = Ms.mat(j) * direct[j].normalized;
          const double nrm = direct[j].normalized.norm();
          direct[j].normalized /= nrm;
          direct[j].log_norm += std::log(nrm);
        }
      }
      steps_done = target;
      for (std::size_t j = 0; j < n_nodes; ++j) {
        const double err = scaled_relative_error(
            direct[j], ScaledMatrix{state.generator.mat(j), state.log_scale});
        if (err > worst) {
          worst = err;
          worst_case = std::string(c.name) + " k=" + std::to_string(k);
        }
      }
    }
  }
  const double elapsed = now_seconds() - t0;
  report(1, "doubling matches direct for every generator kind",
         worst <= 1e-8 && elapsed < 30.0,
         "worst rel err " + fmt(worst) + " (" + worst_case + "), " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------------------
// 2. Cocycle composition identity on 20 random (n, m, theta) triples.
void criterion2() {
  GridSpec grid = GridSpec::dim1(128);
  RotationVector w = RotationVector::dim1(kGoldenMean);
  MatrixField M = to_spectral(gen::make_near_constant(diag2(2.0, 0.5), 0.4, 17, grid));
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick_n(0, 8);
  std::uniform_real_distribution<double> pick_theta(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = pick_n(rng), m = pick_n(rng);
    const double theta = pick_theta(rng);
    MatrixRM lhs = direct_cocycle(M, w, n + m, {theta});
    MatrixRM rhs =
        direct_cocycle(M, w, n, {mod1(theta + static_cast<double>(m) * w.scalar())}) *
        direct_cocycle(M, w, m, {theta});
    worst = std::max(worst, (lhs - rhs).norm() / std::max(rhs.norm(), 1.0));
  }
  report(2, "composition identity on random triples", worst <= 1e-10,
         "worst rel err " + fmt(worst));
}

// ---------------------------------------------------------------------------
// 3. QR path: orthogonality after 15 steps, diag-log growth vs plain path.
// E = 15 puts the coupling-5 generator in the uniformly hyperbolic regime
// where both paths resolve the same smooth product on the grid.
void criterion3() {
  GridSpec grid = GridSpec::dim1(512);
  RotationVector w = RotationVector::dim1(kGoldenMean);
  MatrixField M = to_grid(to_spectral(gen::make_schrodinger(15.0, 5.0, grid)));
  QRState qr = qr_initial(M, w);
  IterationResult plain = initial_state(to_spectral(M), w);
  double worst_orth = 0.0;
  for (int k = 0; k < 15; ++k) {
    qr = qr_double_step(qr, IterationStrategy::FourierDiag, true);
    plain = double_step(plain, IterationStrategy::FourierDiag, true);
    for (std::size_t j = 0; j < grid.total(); ++j)
      worst_orth = std::max(
          worst_orth,
          (qr.qr.Q.mat(j).transpose() * qr.qr.Q.mat(j) - Eigen::Matrix2d::Identity()).norm());
  }
  const double n = static_cast<double>(qr.steps_n);
  double qr_rate = 0.0, plain_rate = 0.0;
  for (std::size_t j = 0; j < grid.total(); ++j) {
    qr_rate += qr_diag_logs(qr, j)[0];
    plain_rate += std::log(plain.generator.mat(j).norm()) + plain.log_scale;
  }
  qr_rate /= n * static_cast<double>(grid.total());
  plain_rate /= n * static_cast<double>(grid.total());
  const double gap = std::abs(qr_rate - plain_rate);
  report(3, "QR path orthogonality and growth agreement",
         worst_orth <= 1e-11 && gap <= 1e-6,
         "worst |Q'Q-I| " + fmt(worst_orth) + ", per-step log gap " + fmt(gap));
}

// ---------------------------------------------------------------------------
// 4. R-update ordering: which of the two reproduces direct n=2.
void criterion4() {
  GridSpec grid = GridSpec::dim1(128);
  RotationVector w = RotationVector::dim1(kGoldenMean);
  MatrixField M = to_spectral(gen::make_schrodinger(0.3, 1.0, grid));
  auto worst_for = [&](RTildeOrdering ordering) {
    QRState s = qr_double_step(qr_initial(to_grid(M), w), IterationStrategy::FourierDiag, false,
                               ordering);
    MatrixField recon = qr_reconstruct(s.qr);
    double worst = 0.0;
    for (std::size_t j = 0; j < grid.total(); ++j) {
      MatrixRM expected = direct_cocycle(M, w, 2, {grid.node(j)[0]});
      worst = std::max(worst, (recon.mat(j) * std::exp(s.log_scale) - expected).norm());
    }
    return worst;
  };
  const double verified = worst_for(RTildeOrdering::Verified);
  const double printed = worst_for(RTildeOrdering::AsPrinted);
  const bool pass = verified <= 1e-10;
  report(4, "R-update ordering reproduces direct n=2", pass,
         std::string("ordering passing: Rbar*R(theta) [") +
             (pass ? "unshifted R, err " + fmt(verified) : "err " + fmt(verified)) +
             "]; shifted-R variant err " + fmt(printed));
}

// ---------------------------------------------------------------------------
// 5. Continued-fraction path vs direct at q=13 (golden) and q=29 (silver).
void criterion5() {
  GridSpec grid = GridSpec::dim1(128);
  MatrixField M = to_spectral(gen::make_schrodinger(0.2, 0.8, grid));
  double worst = 0.0;
  std::string where;
  auto check = [&](double omega, int levels, std::uint64_t q, const char* name) {
    RotationVector w = RotationVector::dim1(omega);
    IterationResult res = iterate_cf(M, w, levels, IterationStrategy::FourierDiag, true);
    if (res.steps_n != q) {
      worst = 1.0;
      where = std::string(name) + " wrong q";
      return;
    }
    for (std::size_t j = 0; j < grid.total(); ++j) {
      ScaledMatrix direct = direct_cocycle_scaled(M, w, static_cast<long long>(q),
                                                  {grid.node(j)[0]});
      const double err =
          scaled_relative_error(direct, ScaledMatrix{res.generator.mat(j), res.log_scale});
      if (err > worst) {
        worst = err;
        where = name;
      }
    }
  };
  check(kGoldenMean, 6, 13, "golden q=13");
  check(kSilverMean, 4, 29, "silver q=29");
  report(5, "continued-fraction path matches direct", worst <= 1e-9,
         "worst rel err " + fmt(worst) + " (" + where + ")");
}

// ---------------------------------------------------------------------------
// 6. Bundle extraction on the conjugated constant and the non-orientable case.
void criterion6() {
  RotationVector w = RotationVector::dim1(kGoldenMean);
  GridSpec grid = GridSpec::dim1(128);
  MatrixField M = to_grid(
      to_spectral(gen::make_conjugated_constant(diag2(3.0, 1.0 / 3.0), 0.2, w, grid)));
  bool pass = true;
  std::string detail;
  try {
    BundleSection s = extract_unstable(M, w, 8);
    double lam_err = 0.0;
    for (std::size_t j = 0; j < grid.total(); ++j)
      lam_err = std::max(lam_err, std::abs(s.lambda.value(j, 0, 0) - 3.0));
    const double res = invariance_residual(M, w, s).sup_norm();
    pass = s.orientable && lam_err <= 1e-8 && res <= 1e-8;
    detail = "lambda err " + fmt(lam_err) + ", residual " + fmt(res);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }

  GridSpec big = GridSpec::dim1(256);
  MatrixField N = gen::make_nonorientable(3.0, w, big);
  ExtractOptions loose;
  loose.tolerance = 1e9;  // sign seam makes the global residual O(1) by design
  BundleSection sn = extract_unstable(N, w, 6, loose);
  QRState st = qr_initial(N, w);
  std::vector<MatrixField> history{st.qr.Q};
  for (int k = 0; k < 6; ++k) {
    st = qr_double_step(st, IterationStrategy::FourierDiag, true);
    history.push_back(st.qr.Q);
  }
  StraddleReport rep = detect_straddle(history);
  pass = pass && !sn.orientable && !rep.empty();
  detail += std::string("; non-orientable flag ") + (sn.orientable ? "true" : "false") +
            ", straddle suspects " + std::to_string(rep.suspect_nodes.size());
  report(6, "bundle extraction and non-orientable detection", pass, detail);
}

// ---------------------------------------------------------------------------
// 7. Lyapunov exponent: fast bundle readout vs Birkhoff direct at n = 2^14.
void criterion7() {
  const double t0 = now_seconds();
  GridSpec grid = GridSpec::dim1(512);
  RotationVector w = RotationVector::dim1(kGoldenMean);
  MatrixField M = to_spectral(gen::make_schrodinger(0.0, 5.0, grid));

  // Fast-path exponent: grid mean of the per-step log multiplier read off the
  // top R diagonal after 14 QR doublings. At E = 0 the cocycle is
  // nonuniformly hyperbolic (the energy lies in the spectrum), so the grid
  // product carries an O(1e-3) aliasing bias that no fixed N removes; the
  // 1e-4 match below is reported honestly even when it fails.
  QRState qr = qr_initial(to_grid(M), w);
  for (int k = 0; k < 14; ++k) qr = qr_double_step(qr, IterationStrategy::FourierDiag, true);
  double fast = 0.0;
  for (std::size_t j = 0; j < grid.total(); ++j) fast += qr_diag_logs(qr, j)[0];
  fast /= static_cast<double>(qr.steps_n) * static_cast<double>(grid.total());

  const long long n = 1 << 14;
  const std::size_t samples = 32;
  double birkhoff = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double theta = static_cast<double>(i) / static_cast<double>(samples);
    birkhoff += direct_cocycle_scaled(M, w, n, {theta}).log_norm / static_cast<double>(n);
  }
  birkhoff /= static_cast<double>(samples);

  const double gap = std::abs(fast - birkhoff);
  const double floor = std::log(5.0) - 0.01;
  const double elapsed = now_seconds() - t0;
  report(7, "Lyapunov exponent cross-check",
         gap <= 1e-4 && fast > floor && birkhoff > floor && elapsed < 60.0,
         "fast " + fmt(fast) + ", Birkhoff " + fmt(birkhoff) + ", gap " + fmt(gap) +
             " (tol 1e-4), floor " + (fast > floor && birkhoff > floor ? "ok" : "violated") +
             ", " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------------------
// 8. Reduction to constant: recover (mu0, p0), both signs, defining identity.
void criterion8() {
  auto run_case = [&](double mu0, double omega, double& mu_err, double& p_err, double& res) {
    RotationVector w = RotationVector::dim1(omega);
    GridSpec grid = GridSpec::dim1(64);
    ScalarField g0(grid, 1);
    for (std::size_t j = 0; j < grid.total(); ++j)
      g0.value(j, 0, 0) = 0.3 * std::cos(2.0 * std::numbers::pi * grid.node(j)[0]);
    ScalarField gs = shift(g0, w, ShiftStrategy::FourierDiag);
    ScalarField lambda(grid, 1);
    for (std::size_t j = 0; j < grid.total(); ++j)
      lambda.value(j, 0, 0) = mu0 * std::exp(gs.value(j, 0, 0) - g0.value(j, 0, 0));
    ReducedForm r = reduce_rank1(lambda, w);
    mu_err = std::abs(r.mu - mu0);
    p_err = 0.0;
    for (std::size_t j = 0; j < grid.total(); ++j)
      p_err = std::max(p_err, std::abs(r.p.value(j, 0, 0) - std::exp(g0.value(j, 0, 0))));
    ScalarField ps = shift(r.p, w, ShiftStrategy::FourierDiag);
    res = 0.0;
    for (std::size_t j = 0; j < grid.total(); ++j)
      res = std::max(res, std::abs(lambda.value(j, 0, 0) * r.p.value(j, 0, 0) -
                                   r.mu * ps.value(j, 0, 0)));
  };
  double mu_p, p_p, res_p, mu_m, p_m, res_m;
  run_case(2.0, kGoldenMean, mu_p, p_p, res_p);
  run_case(-1.5, kSilverMean, mu_m, p_m, res_m);
  const bool pass = mu_p <= 1e-10 && p_p <= 1e-9 && res_p <= 1e-8 && mu_m <= 1e-10 &&
                    p_m <= 1e-9 && res_m <= 1e-8;
  report(8, "rank-1 reduction recovers the constructed inverse", pass,
         "mu errs " + fmt(mu_p) + "/" + fmt(mu_m) + ", p errs " + fmt(p_p) + "/" + fmt(p_m) +
             ", identity residuals " + fmt(res_p) + "/" + fmt(res_m));
}

// ---------------------------------------------------------------------------
// 9. Cost scaling: product exponents per strategy, linear doubling in k.
void criterion9() {
  const double t0 = now_seconds();
  RotationVector w = RotationVector::dim1(kGoldenMean);
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  auto fit = [](const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
      syy += y[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double r = (n * sxy - sx * sy) /
                     std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    return std::pair<double, double>(slope, r * r);
  };

  struct Band {
    IterationStrategy strategy;
    const char* name;
    double lo, hi;
  };
  const Band bands[] = {{IterationStrategy::Spectral, "spectral", 1.7, 2.3},
                        {IterationStrategy::FourierDiag, "fourier", 0.9, 1.4},
                        {IterationStrategy::GridInterp, "grid", 0.8, 1.2}};
  bool pass = true;
  std::string detail;
  for (const Band& b : bands) {
    std::vector<double> log_n, log_t;
    for (std::size_t N : {256ul, 512ul, 1024ul, 2048ul, 4096ul}) {
      MatrixField M = to_grid(to_spectral(gen::make_schrodinger(0.0, 1.2, GridSpec::dim1(N))));
      IterationResult state = initial_state(M, w);
      std::vector<double> times;
      (void)double_step(state, b.strategy, true);  // warmup
      for (int rep = 0; rep < 5; ++rep) {
        const double s0 = now_seconds();
        (void)double_step(state, b.strategy, true);
        times.push_back(now_seconds() - s0);
      }
      log_n.push_back(std::log(static_cast<double>(N)));
      log_t.push_back(std::log(std::max(median_of(times), 1e-9)));
    }
    auto [slope, r2] = fit(log_n, log_t);
    pass = pass && slope >= b.lo && slope <= b.hi;
    detail += std::string(b.name) + " " + fmt(slope) + " ";
  }

  MatrixField M = to_spectral(gen::make_schrodinger(0.0, 1.2, GridSpec::dim1(1024)));
  std::vector<double> ks, ts;
  for (int k = 4; k <= 14; ++k) {
    std::vector<double> times;
    for (int rep = 0; rep < 3; ++rep) {
      const double s0 = now_seconds();
      (void)iterate_fast(M, w, k, IterationStrategy::FourierDiag, true);
      times.push_back(now_seconds() - s0);
    }
    ks.push_back(static_cast<double>(k));
    ts.push_back(median_of(times));
  }
  auto [slope_k, r2_k] = fit(ks, ts);
  (void)slope_k;
  const double elapsed = now_seconds() - t0;
  pass = pass && r2_k >= 0.9 && elapsed < 300.0;
  report(9, "cost exponents and linear doubling", pass,
         detail + "| k-linearity r2 " + fmt(r2_k) + ", " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------------------
// 10. Preconditioning: conjugation identity for n=4 and constant recovery.
void criterion10() {
  GridSpec grid = GridSpec::dim1(128);
  RotationVector w = RotationVector::dim1(kGoldenMean);
  MatrixField M = to_grid(to_spectral(gen::make_schrodinger(0.5, 0.8, grid)));
  MatrixField Q = gen::make_rotation_frame(0.15, grid);
  MatrixField Mt = to_spectral(precondition(M, Q, w));
  MatrixField Qs = to_spectral(Q);
  double conj_err = 0.0;
  const long long n = 4;
  for (double theta : {0.0, 0.21875, 0.59375, 0.84375}) {
    MatrixRM lhs = direct_cocycle(Mt, w, n, {theta});
    const double sh = mod1(theta + static_cast<double>(n) * w.scalar());
    MatrixRM rhs = evaluate(Qs, {sh}).inverse() *
                   direct_cocycle(to_spectral(M), w, n, {theta}) * evaluate(Qs, {theta});
    conj_err = std::max(conj_err, (lhs - rhs).cwiseAbs().maxCoeff());
  }

  Eigen::Matrix2d A = diag2(3.0, 1.0 / 3.0);
  MatrixField C = to_grid(to_spectral(gen::make_conjugated_constant(A, 0.2, w, grid)));
  MatrixField frame = gen::make_rotation_frame(0.2, grid);
  MatrixField rec = precondition(C, frame, w);
  double const_err = 0.0;
  for (std::size_t j = 0; j < grid.total(); ++j)
    const_err = std::max(const_err, (rec.mat(j) - A).cwiseAbs().maxCoeff());

  report(10, "preconditioning identities", conj_err <= 1e-9 && const_err <= 1e-10,
         "conjugation err " + fmt(conj_err) + ", constant recovery err " + fmt(const_err));
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  if (g_failures == 0)
    std::printf("acceptance: all criteria passed\n");
  else
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return g_failures;
}
