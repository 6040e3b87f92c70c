// SPDX-License-Identifier: Apache-2.0
#include "fdv/vae.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fdv/errors.hpp"

namespace fdv {

void VaeConfig::validate() const {
  if (input_dim < 1) throw UsageError("VaeConfig: input_dim must be positive");
  if (latent_dim < 1) throw UsageError("VaeConfig: latent_dim must be positive");
  if (hidden_dims.empty()) throw UsageError("VaeConfig: at least one hidden layer is required");
  for (int h : hidden_dims) {
    if (h < 1) throw UsageError("VaeConfig: hidden widths must be positive");
  }
  if (!(kl_weight >= 0.0) || !std::isfinite(kl_weight)) throw UsageError("VaeConfig: kl_weight must be >= 0");
}

VaeModel init_vae(const VaeConfig& cfg, Rng& rng) {
  cfg.validate();
  VaeModel m;
  m.config = cfg;
  auto& layers = m.params.layers;
  Eigen::Index prev = cfg.input_dim;
  for (int h : cfg.hidden_dims) {
    layers.push_back(glorot_dense(prev, h, rng));
    prev = h;
  }
  layers.push_back(glorot_dense(prev, cfg.latent_dim, rng));
  layers.push_back(glorot_dense(prev, cfg.latent_dim, rng));
  prev = cfg.latent_dim;
  for (auto it = cfg.hidden_dims.rbegin(); it != cfg.hidden_dims.rend(); ++it) {
    layers.push_back(glorot_dense(prev, *it, rng));
    prev = *it;
  }
  layers.push_back(glorot_dense(prev, cfg.input_dim, rng));
  return m;
}

EncoderPass encoder_forward(const VaeModel& model, const Matrix& x) {
  if (x.cols() != model.config.input_dim) {
    throw UsageError("encode: expected input dimension " + std::to_string(model.config.input_dim) + ", got " +
                     std::to_string(x.cols()));
  }
  const auto& layers = model.params.layers;
  EncoderPass pass;
  Matrix h = x;
  for (std::size_t i = 0; i < model.hidden_count(); ++i) {
    Matrix a = affine_forward(h, layers[i].weight, layers[i].bias);
    pass.inputs.push_back(std::move(h));
    h = relu(a);
    pass.pre.push_back(std::move(a));
  }
  pass.mu = affine_forward(h, layers[model.mu_index()].weight, layers[model.mu_index()].bias);
  pass.logvar = affine_forward(h, layers[model.logvar_index()].weight, layers[model.logvar_index()].bias);
  pass.hidden_out = std::move(h);
  return pass;
}

void encoder_backward(const VaeModel& model, const EncoderPass& pass, const Matrix& dmu, const Matrix& dlogvar,
                      LayerGrads& grads) {
  const auto& layers = model.params.layers;
  auto& g = grads.layers;
  const auto mu_g = affine_backward(pass.hidden_out, layers[model.mu_index()].weight, dmu);
  const auto lv_g = affine_backward(pass.hidden_out, layers[model.logvar_index()].weight, dlogvar);
  g[model.mu_index()].weight += mu_g.dw;
  g[model.mu_index()].bias += mu_g.db;
  g[model.logvar_index()].weight += lv_g.dw;
  g[model.logvar_index()].bias += lv_g.db;

  Matrix upstream = mu_g.dx + lv_g.dx;
  for (std::size_t k = model.hidden_count(); k-- > 0;) {
    const Matrix da = relu_backward(pass.pre[k], upstream);
    const auto lg = affine_backward(pass.inputs[k], layers[k].weight, da, k > 0);
    g[k].weight += lg.dw;
    g[k].bias += lg.db;
    if (k > 0) upstream = lg.dx;
  }
}

DecoderPass decoder_forward(const VaeModel& model, const Matrix& z) {
  if (z.cols() != model.config.latent_dim) {
    throw UsageError("decode: expected latent dimension " + std::to_string(model.config.latent_dim) + ", got " +
                     std::to_string(z.cols()));
  }
  const auto& layers = model.params.layers;
  DecoderPass pass;
  Matrix h = z;
  for (std::size_t i = model.decoder_begin(); i < model.output_index(); ++i) {
    Matrix a = affine_forward(h, layers[i].weight, layers[i].bias);
    pass.inputs.push_back(std::move(h));
    h = relu(a);
    pass.pre.push_back(std::move(a));
  }
  const Dense& out = layers[model.output_index()];
  pass.output = sigmoid(affine_forward(h, out.weight, out.bias));
  pass.hidden_out = std::move(h);
  return pass;
}

Matrix decoder_backward(const VaeModel& model, const DecoderPass& pass, const Matrix& dlogits, LayerGrads& grads) {
  const auto& layers = model.params.layers;
  auto& g = grads.layers;
  const auto og = affine_backward(pass.hidden_out, layers[model.output_index()].weight, dlogits);
  g[model.output_index()].weight += og.dw;
  g[model.output_index()].bias += og.db;
  Matrix upstream = og.dx;
  for (std::size_t k = pass.pre.size(); k-- > 0;) {
    const std::size_t idx = model.decoder_begin() + k;
    const Matrix da = relu_backward(pass.pre[k], upstream);
    const auto lg = affine_backward(pass.inputs[k], layers[idx].weight, da);
    g[idx].weight += lg.dw;
    g[idx].bias += lg.db;
    upstream = lg.dx;
  }
  return upstream;
}

namespace {

Matrix row_of(std::span<const double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

}  // namespace

LatentGaussian encode(const VaeModel& model, std::span<const double> x) {
  const EncoderPass pass = encoder_forward(model, row_of(x));
  LatentGaussian lg;
  lg.mu = pass.mu.row(0).transpose();
  lg.sigma = pass.sigma().row(0).transpose();
  return lg;
}

Vector reparameterize(const LatentGaussian& lg, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(lg.dim());
  for (Eigen::Index k = 0; k < lg.dim(); ++k) z[k] = lg.mu[k] + lg.sigma[k] * normal(rng);
  return z;
}

Vector decode(const VaeModel& model, std::span<const double> z) {
  const DecoderPass pass = decoder_forward(model, row_of(z));
  return pass.output.row(0).transpose();
}

double kl_divergence(const LatentGaussian& lg) {
  double kl = 0.0;
  for (Eigen::Index k = 0; k < lg.dim(); ++k) {
    const double var = lg.sigma[k] * lg.sigma[k];
    kl += lg.mu[k] * lg.mu[k] + var - 1.0 - std::log(var);
  }
  return 0.5 * kl;
}

double recon_loss(std::span<const double> x, std::span<const double> xhat) {
  if (x.size() != xhat.size()) throw UsageError("recon_loss: length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = std::clamp(xhat[i], kReconClamp, 1.0 - kReconClamp);
    loss -= x[i] * std::log(p) + (1.0 - x[i]) * std::log(1.0 - p);
  }
  return loss;
}

Matrix draw_standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix eps(rows, cols);
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = normal(rng);
  return eps;
}

VaeHeadGrads vae_terms(const VaeModel& model, const EncoderPass& enc, const Matrix& x, const Matrix& noise,
                       LayerGrads& grads) {
  const Eigen::Index n = x.rows();
  if (noise.rows() != n || noise.cols() != model.config.latent_dim) {
    throw UsageError("vae_loss: noise must be " + std::to_string(n) + "x" + std::to_string(model.config.latent_dim) +
                     ", got " + shape_of(noise));
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double klw = model.config.kl_weight;

  const Matrix sigma = enc.sigma();
  const Matrix z = enc.mu + sigma.cwiseProduct(noise);
  const DecoderPass dec = decoder_forward(model, z);

  double recon = 0.0;
  Matrix dlogits(n, x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double p = dec.output.data()[i];
    const double t = x.data()[i];
    const double pc = std::clamp(p, kReconClamp, 1.0 - kReconClamp);
    recon -= t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc);
    // d/dlogit of the clamped BCE; flat where the clamp is active.
    dlogits.data()[i] = (p == pc) ? (p - t) * inv_n : 0.0;
  }
  const Matrix var = (enc.logvar.array().exp()).matrix();
  const double kl = 0.5 * (enc.mu.array().square() + var.array() - 1.0 - enc.logvar.array()).sum();

  VaeHeadGrads out;
  out.loss = (recon + klw * kl) * inv_n;
  if (!std::isfinite(out.loss)) throw NumericError("vae_loss: non-finite loss");

  const Matrix dz = decoder_backward(model, dec, dlogits, grads);
  out.dmu = dz + (klw * inv_n) * enc.mu;
  out.dlogvar = (dz.array() * 0.5 * sigma.array() * noise.array() + (klw * inv_n * 0.5) * (var.array() - 1.0)).matrix();
  return out;
}

LossAndGrads vae_loss(const VaeModel& model, const Matrix& x, const Matrix& noise) {
  LossAndGrads r;
  r.grads = LayerGrads::zeros_like(model.params);
  const EncoderPass enc = encoder_forward(model, x);
  const VaeHeadGrads head = vae_terms(model, enc, x, noise, r.grads);
  encoder_backward(model, enc, head.dmu, head.dlogvar, r.grads);
  r.loss = head.loss;
  return r;
}

LossAndGrads vae_loss(const VaeModel& model, const Matrix& x, Rng& rng) {
  return vae_loss(model, x, draw_standard_normal(rng, x.rows(), model.config.latent_dim));
}

Vector extract_features(const VaeModel& model, std::span<const double> x, Rng& rng) {
  return reparameterize(encode(model, x), rng);
}

Matrix extract_features(const VaeModel& model, const Matrix& x, Rng& rng) {
  const EncoderPass pass = encoder_forward(model, x);
  const Matrix sigma = pass.sigma();
  const Matrix eps = draw_standard_normal(rng, x.rows(), model.config.latent_dim);
  return pass.mu + sigma.cwiseProduct(eps);
}

}  // namespace fdv
