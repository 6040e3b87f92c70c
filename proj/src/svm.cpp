// SPDX-License-Identifier: Apache-2.0
#include "fdv/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fdv/errors.hpp"

namespace fdv {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

void SvmConfig::validate() const {
  if (gamma && !(*gamma > 0.0)) throw UsageError("svm: gamma must be positive");
  if (!(C > 0.0)) throw UsageError("svm: C must be positive");
  if (!(tol > 0.0)) throw UsageError("svm: tol must be positive");
  if (max_iter < 1) throw UsageError("svm: max_iter must be >= 1");
  if (class_weight_neg && !(*class_weight_neg > 0.0)) throw UsageError("svm: class_weight_neg must be positive");
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size()) throw UsageError("rbf_kernel: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    d2 += diff * diff;
  }
  return std::exp(-gamma * d2);
}

double default_gamma(const Matrix& features) {
  const double mean = features.mean();
  const double var = (features.array() - mean).square().mean();
  const double dim = static_cast<double>(features.cols());
  return var > 0.0 ? 1.0 / (dim * var) : 1.0 / dim;
}

DualSolution smo_solve(const Matrix& features, std::span<const int> labels, const SvmConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(features.rows());
  if (labels.size() != n) throw UsageError("smo_train: label count does not match feature rows");
  std::size_t n_pos = 0, n_neg = 0;
  for (int y : labels) {
    if (y == 1) {
      ++n_pos;
    } else if (y == -1) {
      ++n_neg;
    } else {
      throw UsageError("smo_train: labels must be +1 or -1");
    }
  }
  if (n_pos == 0 || n_neg == 0) throw UsageError("smo_train: both classes must be present");
  if (!features.allFinite()) throw NumericError("smo_train: non-finite features");

  DualSolution sol;
  sol.gamma = cfg.gamma.value_or(default_gamma(features));
  const double neg_weight = cfg.class_weight_neg.value_or(static_cast<double>(n_pos) / static_cast<double>(n_neg));
  sol.upper.resize(n);
  for (std::size_t t = 0; t < n; ++t) sol.upper[t] = labels[t] == 1 ? cfg.C : cfg.C * neg_weight;

  // Q_ij = y_i y_j K_ij
  Matrix q(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    q(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double k = rbf_kernel(row_span(features, i), row_span(features, j), sol.gamma);
      q(i, j) = q(j, i) = labels[i] * labels[j] * k;
    }
  }

  auto& alpha = sol.alpha;
  alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);  // Q alpha - e
  const std::vector<double>& upper = sol.upper;
  auto at_upper = [&](std::size_t t) { return alpha[t] >= upper[t]; };
  auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  for (sol.iterations = 0; sol.iterations < cfg.max_iter; ++sol.iterations) {
    // i: maximal violator in I_up.
    double gmax = -kInf;
    std::ptrdiff_t i_sel = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (labels[t] == 1) {
        if (!at_upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          i_sel = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!at_lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        i_sel = static_cast<std::ptrdiff_t>(t);
      }
    }
    // j: best second-order decrease among I_low.
    double gmax2 = -kInf;
    double best_obj = kInf;
    std::ptrdiff_t j_sel = -1;
    if (i_sel >= 0) {
      const auto i = static_cast<std::size_t>(i_sel);
      for (std::size_t t = 0; t < n; ++t) {
        if (labels[t] == 1) {
          if (at_lower(t)) continue;
          const double diff = gmax + grad[t];
          gmax2 = std::max(gmax2, grad[t]);
          if (diff > 0.0) {
            double quad = 2.0 - 2.0 * labels[i] * q(i, t);
            if (quad <= 0.0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) {
              best_obj = obj;
              j_sel = static_cast<std::ptrdiff_t>(t);
            }
          }
        } else {
          if (at_upper(t)) continue;
          const double diff = gmax - grad[t];
          gmax2 = std::max(gmax2, -grad[t]);
          if (diff > 0.0) {
            double quad = 2.0 + 2.0 * labels[i] * q(i, t);
            if (quad <= 0.0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) {
              best_obj = obj;
              j_sel = static_cast<std::ptrdiff_t>(t);
            }
          }
        }
      }
    }
    if (i_sel < 0 || j_sel < 0 || gmax + gmax2 < cfg.tol) {
      sol.converged = true;
      break;
    }

    const auto i = static_cast<std::size_t>(i_sel);
    const auto j = static_cast<std::size_t>(j_sel);
    const double ci = upper[i], cj = upper[j];
    const double old_i = alpha[i], old_j = alpha[j];
    if (labels[i] != labels[j]) {
      double quad = 2.0 + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > ci - cj) {
        if (alpha[i] > ci) {
          alpha[i] = ci;
          alpha[j] = ci - diff;
        }
      } else if (alpha[j] > cj) {
        alpha[j] = cj;
        alpha[i] = cj + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > ci) {
        if (alpha[i] > ci) {
          alpha[i] = ci;
          alpha[j] = sum - ci;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > cj) {
        if (alpha[j] > cj) {
          alpha[j] = cj;
          alpha[i] = sum - cj;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_i;
    const double daj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * dai + q(j, t) * daj;
  }

  // Bias: average of y G over free vectors, else the midpoint of the bounds.
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = labels[t] * grad[t];
    if (at_upper(t)) {
      if (labels[t] == -1) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else if (at_lower(t)) {
      if (labels[t] == 1) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  sol.bias = -rho;
  return sol;
}

SvmModel smo_train(const Matrix& features, std::span<const int> labels, const SvmConfig& cfg) {
  const DualSolution sol = smo_solve(features, labels, cfg);
  SvmModel model;
  model.gamma = sol.gamma;
  model.bias = sol.bias;
  model.converged = sol.converged;
  std::vector<Eigen::Index> keep;
  for (std::size_t t = 0; t < sol.alpha.size(); ++t) {
    if (sol.alpha[t] > 0.0) keep.push_back(static_cast<Eigen::Index>(t));
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(keep.size()), features.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    model.support_vectors.row(static_cast<Eigen::Index>(k)) = features.row(keep[k]);
    model.dual_coeffs.push_back(labels[static_cast<std::size_t>(keep[k])] * sol.alpha[static_cast<std::size_t>(keep[k])]);
  }
  return model;
}

double decision_value(const SvmModel& model, std::span<const double> x) {
  if (model.support_count() > 0 && static_cast<Eigen::Index>(x.size()) != model.dim()) {
    throw UsageError("decision_value: feature dimension " + std::to_string(x.size()) + " does not match model " +
                     std::to_string(model.dim()));
  }
  double f = 0.0;
  for (std::size_t k = 0; k < model.support_count(); ++k) {
    f += model.dual_coeffs[k] * rbf_kernel(row_span(model.support_vectors, static_cast<Eigen::Index>(k)), x, model.gamma);
  }
  return f + model.bias;
}

}  // namespace fdv
