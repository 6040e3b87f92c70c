// SPDX-License-Identifier: Apache-2.0
#include "fdv/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "fdv/errors.hpp"

namespace fdv {

std::string shape_of(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

Dense glorot_dense(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Dense d;
  d.weight.resize(fan_in, fan_out);
  for (Eigen::Index i = 0; i < d.weight.size(); ++i) d.weight.data()[i] = dist(rng);
  d.bias = RowVector::Zero(fan_out);
  return d;
}

LayerGrads LayerGrads::zeros_like(const LayerGrads& other) {
  LayerGrads g;
  g.layers.reserve(other.layers.size());
  for (const auto& l : other.layers) {
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), RowVector::Zero(l.bias.size())});
  }
  return g;
}

std::size_t LayerGrads::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

void LayerGrads::axpy(double alpha, const LayerGrads& other) {
  if (other.layers.size() != layers.size()) throw UsageError("LayerGrads::axpy: layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight.noalias() += alpha * other.layers[i].weight;
    layers[i].bias.noalias() += alpha * other.layers[i].bias;
  }
}

void LayerGrads::scale(double alpha) {
  for (auto& l : layers) {
    l.weight *= alpha;
    l.bias *= alpha;
  }
}

bool LayerGrads::all_finite() const {
  return std::all_of(layers.begin(), layers.end(),
                     [](const Dense& l) { return l.weight.allFinite() && l.bias.allFinite(); });
}

std::vector<double> LayerGrads::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.weight.data(), l.weight.data() + l.weight.size());
    flat.insert(flat.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return flat;
}

void LayerGrads::assign_flat(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw UsageError("LayerGrads::assign_flat: expected " + std::to_string(parameter_count()) + " values, got " +
                     std::to_string(flat.size()));
  }
  std::size_t at = 0;
  for (auto& l : layers) {
    std::copy_n(flat.data() + at, l.weight.size(), l.weight.data());
    at += static_cast<std::size_t>(l.weight.size());
    std::copy_n(flat.data() + at, l.bias.size(), l.bias.data());
    at += static_cast<std::size_t>(l.bias.size());
  }
}

Matrix affine_forward(const Matrix& x, const Matrix& w, const RowVector& b) {
  if (x.cols() != w.rows() || w.cols() != b.size()) {
    throw UsageError("affine_forward: shape mismatch x " + shape_of(x) + " * W " + shape_of(w) + " + b 1x" +
                     std::to_string(b.size()));
  }
  Matrix y = x * w;
  y.rowwise() += b;
  return y;
}

AffineBackward affine_backward(const Matrix& x, const Matrix& w, const Matrix& upstream, bool want_dx) {
  if (upstream.rows() != x.rows() || upstream.cols() != w.cols() || x.cols() != w.rows()) {
    throw UsageError("affine_backward: shape mismatch x " + shape_of(x) + ", W " + shape_of(w) + ", upstream " +
                     shape_of(upstream));
  }
  AffineBackward g;
  g.dw.noalias() = x.transpose() * upstream;
  g.db = upstream.colwise().sum();
  if (want_dx) g.dx.noalias() = upstream * w.transpose();
  return g;
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& x, const Matrix& upstream) {
  if (x.rows() != upstream.rows() || x.cols() != upstream.cols()) {
    throw UsageError("relu_backward: shape mismatch " + shape_of(x) + " vs " + shape_of(upstream));
  }
  return (x.array() > 0.0).select(upstream, 0.0);
}

Matrix sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

void ensure_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericError("non-finite values in " + what);
}

double grad_check(const std::function<double(std::span<const double>)>& f, std::span<const double> params,
                  std::span<const double> analytic, double eps, std::span<const std::size_t> coords) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw UsageError("grad_check: eps must lie in (0, 1e-2]");
  if (analytic.size() != params.size()) throw UsageError("grad_check: gradient/parameter size mismatch");

  std::vector<double> probe(params.begin(), params.end());
  auto eval = [&]() {
    const double v = f(probe);
    if (!std::isfinite(v)) throw NumericError("grad_check: objective is non-finite");
    return v;
  };
  eval();

  double worst = 0.0;
  auto check = [&](std::size_t i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double up = eval();
    probe[i] = saved - eps;
    const double down = eval();
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  };
  if (coords.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) check(i);
  } else {
    for (auto i : coords) {
      if (i >= params.size()) throw UsageError("grad_check: coordinate out of range");
      check(i);
    }
  }
  return worst;
}

}  // namespace fdv
