// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense arithmetic for the fixed MLP stacks. Storage is Eigen; everything
// here is row-major 64-bit with one sample per row.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fdv/rng.hpp"

namespace fdv {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;

std::string shape_of(const Matrix& m);

// One affine layer: y = x W + b, W is fan_in x fan_out.
struct Dense {
  Matrix weight;
  RowVector bias;

  Eigen::Index fan_in() const { return weight.rows(); }
  Eigen::Index fan_out() const { return weight.cols(); }
};

// Glorot-uniform weights, zero biases.
Dense glorot_dense(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);

// Parameters or gradients of a layer stack, in a fixed declared order.
struct LayerGrads {
  std::vector<Dense> layers;

  static LayerGrads zeros_like(const LayerGrads& other);
  std::size_t parameter_count() const;
  // this += alpha * other
  void axpy(double alpha, const LayerGrads& other);
  void scale(double alpha);
  bool all_finite() const;

  // Flat views in declared order: each layer's weight (row-major), then its bias.
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);
};

using ParamSet = LayerGrads;

// x (n x d) * W (d x h) + b broadcast over rows. Throws UsageError on shape mismatch.
Matrix affine_forward(const Matrix& x, const Matrix& w, const RowVector& b);

struct AffineBackward {
  Matrix dx;
  Matrix dw;
  RowVector db;
};

// Gradients of affine_forward given dL/dy. dx is skipped when want_dx is false.
AffineBackward affine_backward(const Matrix& x, const Matrix& w, const Matrix& upstream, bool want_dx = true);

// Elementwise max(0, x).
Matrix relu(const Matrix& x);
// upstream * [x > 0]; the subgradient at 0 is 0.
Matrix relu_backward(const Matrix& x, const Matrix& upstream);

Matrix sigmoid(const Matrix& x);

// Throws NumericError naming `what` if any entry is NaN or infinite.
void ensure_finite(const Matrix& m, const std::string& what);

// Max over `coords` (all coordinates when empty) of
//   |analytic - central_difference| / max(1, |analytic|, |numeric|).
// eps must lie in (0, 1e-2]. Throws NumericError if f turns non-finite.
double grad_check(const std::function<double(std::span<const double>)>& f, std::span<const double> params,
                  std::span<const double> analytic, double eps, std::span<const std::size_t> coords = {});

}  // namespace fdv
