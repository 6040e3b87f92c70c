// SPDX-License-Identifier: Apache-2.0
#include "fdv/disentangle.hpp"

#include <cmath>
#include <string>

#include "fdv/errors.hpp"

namespace fdv {

const char* to_string(PairKind kind) { return kind == PairKind::GG ? "GG" : "GF"; }

Margin::Margin(double m) : value(m) {
  if (!(m > 0.0) || !std::isfinite(m)) throw UsageError("margin must be a positive finite number");
}

double gauss_distance(const LatentGaussian& a, const LatentGaussian& b) {
  if (a.dim() != b.dim() || a.sigma.size() != b.sigma.size()) {
    throw UsageError("gauss_distance: latent dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()) + ")");
  }
  return (a.mu - b.mu).squaredNorm() + (a.sigma - b.sigma).squaredNorm();
}

double fd_pair_loss(double d, bool same_label, Margin m) {
  if (same_label) return d;
  return d < m.value ? m.value - d : m.value;
}

double fd_pair_slope(double d, bool same_label, Margin m) {
  if (same_label) return 1.0;
  return d < m.value ? -1.0 : 0.0;
}

FdHeadGrads fd_terms(const Matrix& mu, const Matrix& logvar, const std::vector<bool>& same_label, Margin m) {
  const auto n = static_cast<Eigen::Index>(same_label.size());
  if (n == 0) throw UsageError("fd_batch_loss: empty batch");
  if (mu.rows() != 2 * n || logvar.rows() != 2 * n || mu.cols() != logvar.cols()) {
    throw UsageError("fd_batch_loss: expected 2x" + std::to_string(n) + " latent rows, got mu " + shape_of(mu) +
                     " logvar " + shape_of(logvar));
  }
  const Matrix sigma = (0.5 * logvar.array()).exp().matrix();
  const double inv_n = 1.0 / static_cast<double>(n);

  FdHeadGrads out;
  out.dmu = Matrix::Zero(mu.rows(), mu.cols());
  out.dlogvar = Matrix::Zero(mu.rows(), mu.cols());
  double total = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto dm = (mu.row(k) - mu.row(n + k)).eval();
    const auto ds = (sigma.row(k) - sigma.row(n + k)).eval();
    const double d = dm.squaredNorm() + ds.squaredNorm();
    const bool same = same_label[static_cast<std::size_t>(k)];
    total += fd_pair_loss(d, same, m);
    const double slope = fd_pair_slope(d, same, m) * inv_n;
    if (slope == 0.0) continue;
    out.dmu.row(k) += 2.0 * slope * dm;
    out.dmu.row(n + k) -= 2.0 * slope * dm;
    // dsigma/dlogvar = sigma / 2
    out.dlogvar.row(k) += (slope * ds.array() * sigma.row(k).array()).matrix();
    out.dlogvar.row(n + k) -= (slope * ds.array() * sigma.row(n + k).array()).matrix();
  }
  out.loss = total * inv_n;
  if (!std::isfinite(out.loss)) throw NumericError("fd_batch_loss: non-finite loss");
  return out;
}

Matrix stack_pairs(const PairBatch& batch) {
  if (batch.left.rows() != batch.right.rows() || batch.left.cols() != batch.right.cols()) {
    throw UsageError("PairBatch: left " + shape_of(batch.left) + " and right " + shape_of(batch.right) + " differ");
  }
  Matrix x(2 * batch.left.rows(), batch.left.cols());
  x.topRows(batch.left.rows()) = batch.left;
  x.bottomRows(batch.right.rows()) = batch.right;
  return x;
}

LossAndGrads fd_batch_loss(const VaeModel& model, const PairBatch& batch, Margin m) {
  if (batch.size() == 0) throw UsageError("fd_batch_loss: empty batch");
  const EncoderPass enc = encoder_forward(model, stack_pairs(batch));
  const FdHeadGrads head = fd_terms(enc.mu, enc.logvar, batch.same_label, m);
  LossAndGrads r;
  r.loss = head.loss;
  r.grads = LayerGrads::zeros_like(model.params);
  encoder_backward(model, enc, head.dmu, head.dlogvar, r.grads);
  return r;
}

}  // namespace fdv
