// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fdv/matrix.hpp"

namespace fdv {

struct SvmConfig {
  // Kernel width; unset means 1 / (feature_dim * variance of all feature entries).
  std::optional<double> gamma;
  double C = 1.0;
  double tol = 1e-3;
  long max_iter = 1'000'000;
  // Multiplier on C for the negative class; unset means n_pos / n_neg.
  std::optional<double> class_weight_neg;

  void validate() const;
};

// f(x) = sum_k coef_k K(x, S_k) + b, with coef_k = y_k alpha_k.
struct SvmModel {
  Matrix support_vectors;  // one per row
  std::vector<double> dual_coeffs;
  double bias = 0.0;
  double gamma = 1.0;
  bool converged = true;

  Eigen::Index dim() const { return support_vectors.cols(); }
  std::size_t support_count() const { return dual_coeffs.size(); }
};

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

// Full dual solution, for inspection and KKT checks.
struct DualSolution {
  std::vector<double> alpha;
  std::vector<double> upper;  // per-sample box bound C_k
  double bias = 0.0;
  double gamma = 1.0;
  bool converged = false;
  long iterations = 0;
};

double default_gamma(const Matrix& features);

// Soft-margin dual solved by SMO with maximal-violating-pair working set
// selection (second-order choice of the partner). Stops when the KKT gap
// falls below cfg.tol. Labels must be +1/-1 with both classes present.
DualSolution smo_solve(const Matrix& features, std::span<const int> labels, const SvmConfig& cfg);

SvmModel smo_train(const Matrix& features, std::span<const int> labels, const SvmConfig& cfg);

double decision_value(const SvmModel& model, std::span<const double> x);

}  // namespace fdv
