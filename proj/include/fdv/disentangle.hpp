// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "fdv/matrix.hpp"
#include "fdv/vae.hpp"

namespace fdv {

enum class PairKind { GG, GF };

const char* to_string(PairKind kind);

// Pairs stored row-aligned: row k of `left` is paired with row k of `right`.
// GG: both sides genuine, same_label. GF: left genuine, right a random
// forgery, different labels.
struct PairBatch {
  PairKind kind = PairKind::GG;
  Matrix left;
  Matrix right;
  std::vector<bool> same_label;
  // Pool indices the rows were drawn from (genuine pool, then genuine or
  // forgery pool for the right side).
  std::vector<std::size_t> left_index;
  std::vector<std::size_t> right_index;

  std::size_t size() const { return same_label.size(); }
};

struct Margin {
  double value = 1.0;

  explicit Margin(double m);
};

// Sum of squared coordinate differences of the means plus those of the
// standard deviations.
double gauss_distance(const LatentGaussian& a, const LatentGaussian& b);

// Piecewise pair loss:
//   same label          -> d
//   different, d <  m   -> m - d
//   different, d >= m   -> m   (constant: no gradient)
double fd_pair_loss(double d, bool same_label, Margin m);
// d(loss)/d(d) for the branch selected above: 1, -1 or 0.
double fd_pair_slope(double d, bool same_label, Margin m);

// Mean pair loss over a batch whose latents are stacked as
// [left rows; right rows] (2n rows). Returns dL/dmu and dL/dlogvar for
// those rows.
struct FdHeadGrads {
  double loss = 0.0;
  Matrix dmu;
  Matrix dlogvar;
};
FdHeadGrads fd_terms(const Matrix& mu, const Matrix& logvar, const std::vector<bool>& same_label, Margin m);

// Mean pair loss and its encoder gradients. Decoder gradients stay zero.
LossAndGrads fd_batch_loss(const VaeModel& model, const PairBatch& batch, Margin m);

// [left; right] as one 2n-row matrix.
Matrix stack_pairs(const PairBatch& batch);

}  // namespace fdv
