#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "cocycle/qr.hpp"

namespace cocycle {

// Rank-1 unstable bundle data: unit section m(theta) and multiplier field
// lambda(theta) with M(th) m(th) = lambda(th) m(th + w).
struct BundleSection {
  MatrixField m;       // D x 1
  ScalarField lambda;  // multiplier, signed
  bool orientable = true;
};

class NoDominantBundleError : public NumericError {
 public:
  NoDominantBundleError(const std::string& msg, ScalarField residual)
      : NumericError(msg), residual_(std::move(residual)) {}
  const ScalarField& residual() const { return residual_; }

 private:
  ScalarField residual_;
};

inline ScalarField invariance_residual(const MatrixField& M, const RotationVector& omega,
                                       const BundleSection& section) {
  MatrixField m_shift = shift(section.m, omega, ShiftStrategy::FourierDiag);
  ScalarField res(M.grid(), 1);
  const auto d = static_cast<Eigen::Index>(M.dim());
  for (std::size_t j = 0; j < M.nodes(); ++j) {
    Eigen::VectorXd mv(d), ms(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      mv(i) = section.m.value(j, static_cast<std::size_t>(i), 0);
      ms(i) = m_shift.value(j, static_cast<std::size_t>(i), 0);
    }
    res.value(j, 0, 0) = (M.mat(j) * mv - section.lambda.value(j, 0, 0) * ms).norm();
  }
  return res;
}

struct ExtractOptions {
  IterationStrategy strategy = IterationStrategy::FourierDiag;
  RTildeOrdering ordering = RTildeOrdering::Verified;
  double tolerance = 1e-6;  // max invariance residual accepted
};

namespace detail {

// Sign-fix a raw D x 1 section along the flattened grid order and check sign
// coherence around the fundamental loops. Exact for ell = 1; for higher ell
// the walk is greedy in row-major order and the flag reflects the axis loops
// at the base corner.
inline bool make_sign_coherent(MatrixField& m) {
  const std::size_t n = m.nodes();
  const std::size_t d = m.rows();
  auto dot = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t r = 0; r < d; ++r) s += m.value(i, r, 0) * m.value(j, r, 0);
    return s;
  };
  for (std::size_t j = 1; j < n; ++j) {
    if (dot(j - 1, j) < 0.0)
      for (std::size_t r = 0; r < d; ++r) m.value(j, r, 0) = -m.value(j, r, 0);
  }
  bool orientable = true;
  const auto& g = m.grid();
  for (std::size_t a = 0; a < g.ell(); ++a) {
    std::vector<std::size_t> mi(g.ell(), 0);
    mi[a] = g.sizes[a] - 1;
    if (dot(g.flatten(mi), 0) < 0.0) orientable = false;
  }
  return orientable;
}

}  // namespace detail

// Power-method readout of the dominant rank-1 bundle: run k QR doublings,
// take at each node the Q column with the largest accumulated R-diagonal log
// (a vector at the shifted base point theta + 2^k w), un-shift it back, and
// read the multiplier off M m with sign aligned to m(theta + w).
inline BundleSection extract_unstable(const MatrixField& M, const RotationVector& omega, int k,
                                      const ExtractOptions& opts = {}) {
  if (k < 0) throw ConfigError("extract_unstable: k must be >= 0");
  const std::size_t d = M.dim();
  QRState state = qr_initial(M, omega);
  for (int i = 0; i < k; ++i) state = qr_double_step(state, opts.strategy, true, opts.ordering);

  MatrixField raw(M.grid(), d, 1);
  for (std::size_t j = 0; j < M.nodes(); ++j) {
    std::size_t best = 0;
    double best_diag = state.qr.R.value(j, 0, 0);
    for (std::size_t i = 1; i < d; ++i) {
      const double diag = state.qr.R.value(j, i, i);
      if (diag > best_diag) {  // ties keep the lowest column index
        best_diag = diag;
        best = i;
      }
    }
    for (std::size_t r = 0; r < d; ++r) raw.value(j, r, 0) = state.qr.Q.value(j, r, best);
  }

  BundleSection section;
  section.orientable = detail::make_sign_coherent(raw);

  // raw(theta) approximates m(theta + 2^k w); shift back by -2^k w.
  RotationVector back = omega.doubled_k(k).negated();
  section.m = shift(raw, back, ShiftStrategy::FourierDiag);
  for (std::size_t j = 0; j < M.nodes(); ++j) {
    double norm = 0.0;
    for (std::size_t r = 0; r < d; ++r) norm += section.m.value(j, r, 0) * section.m.value(j, r, 0);
    norm = std::sqrt(norm);
    if (norm <= 0.0) throw NumericError("extract_unstable: zero section at node " + std::to_string(j));
    for (std::size_t r = 0; r < d; ++r) section.m.value(j, r, 0) /= norm;
  }

  MatrixField m_shift = shift(section.m, omega, ShiftStrategy::FourierDiag);
  section.lambda = ScalarField(M.grid(), 1);
  const auto di = static_cast<Eigen::Index>(d);
  for (std::size_t j = 0; j < M.nodes(); ++j) {
    Eigen::VectorXd mv(di), ms(di);
    for (Eigen::Index i = 0; i < di; ++i) {
      mv(i) = section.m.value(j, static_cast<std::size_t>(i), 0);
      ms(i) = m_shift.value(j, static_cast<std::size_t>(i), 0);
    }
    const Eigen::VectorXd w = M.mat(j) * mv;
    const double sign = w.dot(ms) >= 0.0 ? 1.0 : -1.0;
    section.lambda.value(j, 0, 0) = sign * w.norm();
  }

  ScalarField res = invariance_residual(M, omega, section);
  const double worst = res.sup_norm();
  if (worst > opts.tolerance)
    throw NoDominantBundleError("extract_unstable: invariance residual " + std::to_string(worst) +
                                    " exceeds tolerance " + std::to_string(opts.tolerance) +
                                    " (no clear dominant bundle; increase k or precondition)",
                                std::move(res));
  return section;
}

struct StraddleReport {
  std::vector<std::size_t> suspect_nodes;
  ScalarField derivative_growth;  // growth ratio field of the worst step pair
  double severity = 0.0;          // max flagged ratio / median ratio
  bool empty() const { return suspect_nodes.empty(); }
};

struct StraddleOptions {
  double ratio_threshold = 4.0;  // per-node growth flagged above this
};

namespace detail {

// Max over entries and axes of the centered-difference derivative at each
// node, on the sup-normalized field.
inline std::vector<double> derivative_magnitude(const MatrixField& f) {
  const auto& g = f.grid();
  const std::size_t n = f.nodes();
  const double sup = std::max(f.sup_norm(), 1e-300);
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    auto mi = g.unflatten(j);
    for (std::size_t a = 0; a < g.ell(); ++a) {
      const std::size_t na = g.sizes[a];
      auto up = mi, dn = mi;
      up[a] = (mi[a] + 1) % na;
      dn[a] = (mi[a] + na - 1) % na;
      const std::size_t ju = g.flatten(up), jd = g.flatten(dn);
      const double h = 1.0 / static_cast<double>(na);
      for (std::size_t r = 0; r < f.rows(); ++r)
        for (std::size_t c = 0; c < f.cols(); ++c) {
          const double der =
              std::abs(f.value(ju, r, c) - f.value(jd, r, c)) / (2.0 * h * sup);
          out[j] = std::max(out[j], der);
        }
    }
  }
  return out;
}

}  // namespace detail

// Localized exponential derivative growth between consecutive iterates marks
// the straddle-the-saddle symptom: a few nodes blow up while the field as a
// whole stays tame.
inline StraddleReport detect_straddle(const std::vector<MatrixField>& history,
                                      const StraddleOptions& opts = {}) {
  if (history.size() < 2) throw ConfigError("detect_straddle: need >= 2 consecutive iterates");
  const auto& g = history.front().grid();
  for (const auto& f : history)
    if (f.grid() != g) throw ConfigError("detect_straddle: iterates on different grids");

  const std::size_t n = g.total();
  StraddleReport report;
  report.derivative_growth = ScalarField(g, 1);
  std::vector<char> flagged(n, 0);
  const double eps = 1e-12;

  std::vector<double> prev = detail::derivative_magnitude(history[0]);
  for (std::size_t t = 1; t < history.size(); ++t) {
    std::vector<double> cur = detail::derivative_magnitude(history[t]);
    std::vector<double> ratio(n);
    for (std::size_t j = 0; j < n; ++j) ratio[j] = (cur[j] + eps) / (prev[j] + eps);
    std::vector<double> sorted = ratio;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(n / 2), sorted.end());
    const double median = sorted[n / 2];
    // The symptom is growth in localized spots, so a flagged node must also
    // carry an outsized derivative now; otherwise tiny early derivatives make
    // the floored ratio blow up on perfectly smooth fields.
    std::vector<double> cur_sorted = cur;
    std::nth_element(cur_sorted.begin(), cur_sorted.begin() + static_cast<long>(n / 2),
                     cur_sorted.end());
    const double cur_median = cur_sorted[n / 2];
    if (median < opts.ratio_threshold) {
      for (std::size_t j = 0; j < n; ++j) {
        if (ratio[j] > opts.ratio_threshold && cur[j] > 10.0 * (cur_median + eps)) {
          flagged[j] = 1;
          report.severity = std::max(report.severity, ratio[j] / std::max(median, eps));
          report.derivative_growth.value(j, 0, 0) =
              std::max(report.derivative_growth.value(j, 0, 0), ratio[j]);
        }
      }
    }
    prev = std::move(cur);
  }
  for (std::size_t j = 0; j < n; ++j)
    if (flagged[j]) report.suspect_nodes.push_back(j);
  return report;
}

inline StraddleReport detect_straddle(const std::vector<IterationResult>& history,
                                      const StraddleOptions& opts = {}) {
  std::vector<MatrixField> fields;
  fields.reserve(history.size());
  for (const auto& h : history) fields.push_back(h.generator);
  return detect_straddle(fields, opts);
}

// Equivalence transform M~(th) = Q(th + w)^-1 M(th) Q(th).
inline MatrixField precondition(const MatrixField& M, const MatrixField& Q,
                                const RotationVector& omega,
                                std::vector<double>* condition_out = nullptr) {
  if (Q.grid() != M.grid() || Q.dim() != M.dim())
    throw ConfigError("precondition: Q shape mismatch");
  MatrixField Qs = shift(Q, omega, ShiftStrategy::FourierDiag);
  MatrixField out(M.grid(), M.dim());
  if (condition_out) condition_out->assign(M.nodes(), 0.0);
  for (std::size_t j = 0; j < M.nodes(); ++j) {
    Eigen::MatrixXd q = Q.mat(j);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(q);
    const double cond = svd.singularValues()(0) /
                        std::max(svd.singularValues()(svd.singularValues().size() - 1), 1e-300);
    if (condition_out) (*condition_out)[j] = cond;
    if (cond >= 1e12)
      throw NumericError("precondition: ill-conditioned transform at node " + std::to_string(j) +
                         " (cond " + std::to_string(cond) + ")");
    Eigen::MatrixXd qs = Qs.mat(j);
    out.mat(j) = qs.partialPivLu().solve(M.mat(j) * q);
  }
  return out;
}

}  // namespace cocycle
