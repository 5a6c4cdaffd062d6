#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cocycle/iterate.hpp"

namespace cocycle {

// Pointwise QR factor fields: Q orthogonal, R upper triangular with
// nonnegative diagonal at every node.
struct QRField {
  MatrixField Q;
  MatrixField R;
  std::vector<std::size_t> rank_deficient_nodes;
};

// Algorithm 2's R-update as printed composes R(theta+w) on the right; the
// ordering that actually reproduces shift(M,w)*M keeps the unshifted R.
// Both are available so the discrepancy can be demonstrated.
enum class RTildeOrdering { AsPrinted, Verified };

inline QRField qr_decompose_field(const MatrixField& M) {
  M.require_grid("qr_decompose_field");
  const std::size_t d = M.dim();
  QRField out{MatrixField(M.grid(), d), MatrixField(M.grid(), d), {}};
  const auto di = static_cast<Eigen::Index>(d);
  std::vector<std::vector<std::size_t>> deficient_per_node(M.nodes());
  parallel_for(M.nodes(), [&](std::size_t j) {
    Eigen::MatrixXd A = M.mat(j);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    const double scale = A.norm();
    for (Eigen::Index i = 0; i < di; ++i) {
      if (R(i, i) < 0.0) {
        R.row(i) = -R.row(i);
        Q.col(i) = -Q.col(i);
      }
      if (std::abs(R(i, i)) <= 1e-14 * std::max(scale, 1e-300))
        deficient_per_node[j].push_back(static_cast<std::size_t>(i));
    }
    out.Q.mat(j) = Q;
    out.R.mat(j) = R;
  });
  for (std::size_t j = 0; j < M.nodes(); ++j)
    if (!deficient_per_node[j].empty()) out.rank_deficient_nodes.push_back(j);
  return out;
}

inline MatrixField qr_reconstruct(const QRField& f) {
  return pointwise_product(f.Q, f.R, ProductStrategy::Grid);
}

struct QRState {
  QRField qr;
  RotationVector omega_eff;
  std::uint64_t steps_n = 1;
  double log_scale = 0.0;
};

inline QRState qr_initial(const MatrixField& M, const RotationVector& omega) {
  return QRState{qr_decompose_field(M), omega, 1, 0.0};
}

// One QR-stabilized doubling:
//   S = R(.+w) Q,  S = Qb Rb (pointwise),
//   Qt = Q(.+w) Qb,  Rt = Rb * R  (Verified)  or  Rb * R(.+w)  (AsPrinted).
// Scaling divides Rt by its global max entry, leaving Q untouched.
inline QRState qr_double_step(const QRState& state, IterationStrategy strategy, bool scaling,
                              RTildeOrdering ordering = RTildeOrdering::Verified) {
  const ShiftStrategy shift_strat = strategy == IterationStrategy::GridInterp
                                        ? ShiftStrategy::GridInterp
                                        : ShiftStrategy::FourierDiag;
  const RotationVector& w = state.omega_eff;
  MatrixField Rs = shift(state.qr.R, w, shift_strat);
  MatrixField Qs = shift(state.qr.Q, w, shift_strat);
  MatrixField S = pointwise_product(Rs, state.qr.Q, ProductStrategy::Grid);
  QRField bar = qr_decompose_field(S);
  QRState next;
  next.qr.Q = pointwise_product(Qs, bar.Q, ProductStrategy::Grid);
  next.qr.R = pointwise_product(bar.R, ordering == RTildeOrdering::Verified ? state.qr.R : Rs,
                                ProductStrategy::Grid);
  next.qr.rank_deficient_nodes = std::move(bar.rank_deficient_nodes);
  // Qs is an interpolated shift, so Qs*Qbar is orthogonal only up to the
  // interpolation error. Re-factor it pointwise and absorb the triangular
  // correction into R; the represented product is unchanged and Q keeps the
  // orthogonality the algorithm assumes.
  {
    QRField polish = qr_decompose_field(next.qr.Q);
    next.qr.Q = std::move(polish.Q);
    next.qr.R = pointwise_product(polish.R, next.qr.R, ProductStrategy::Grid);
  }
  next.omega_eff = w.doubled();
  next.steps_n = state.steps_n * 2;
  next.log_scale = 2.0 * state.log_scale;
  if (scaling) {
    const double s = next.qr.R.sup_norm();
    if (s > 0.0 && std::isfinite(s)) {
      next.qr.R.scale(s);
      next.log_scale += std::log(s);
    }
  }
  if (!next.qr.R.all_finite() || !next.qr.Q.all_finite())
    throw NumericError("qr_double_step: non-finite entries" +
                       std::string(scaling ? "" : " (scaling disabled)"));
  return next;
}

// log of the accumulated R diagonal at a node, scaling folded back in.
inline std::vector<double> qr_diag_logs(const QRState& state, std::size_t node) {
  const std::size_t d = state.qr.R.dim();
  std::vector<double> logs(d);
  for (std::size_t i = 0; i < d; ++i)
    logs[i] = std::log(std::max(state.qr.R.value(node, i, i), 1e-300)) + state.log_scale;
  return logs;
}

}  // namespace cocycle
