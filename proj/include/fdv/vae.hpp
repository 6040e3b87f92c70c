// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "fdv/matrix.hpp"
#include "fdv/rng.hpp"

namespace fdv {

struct VaeConfig {
  int input_dim = 64 * 64;
  std::vector<int> hidden_dims{200, 200, 200};
  int latent_dim = 400;
  double kl_weight = 1.0;

  void validate() const;
};

// Encoder: hidden affine+ReLU layers, then affine heads for mu and logvar.
// Decoder: the hidden widths mirrored, then affine+sigmoid back to the input.
// Layer order inside `params`:
//   [encoder hidden..., mu head, logvar head, decoder hidden..., output]
struct VaeModel {
  VaeConfig config;
  ParamSet params;

  std::size_t hidden_count() const { return config.hidden_dims.size(); }
  std::size_t mu_index() const { return hidden_count(); }
  std::size_t logvar_index() const { return hidden_count() + 1; }
  std::size_t decoder_begin() const { return hidden_count() + 2; }
  std::size_t output_index() const { return 2 * hidden_count() + 2; }
};

VaeModel init_vae(const VaeConfig& cfg, Rng& rng);

struct LatentGaussian {
  Vector mu;
  Vector sigma;  // strictly positive: exp(logvar / 2)

  Eigen::Index dim() const { return mu.size(); }
};

// Forward caches for a batch of inputs (one per row).
struct EncoderPass {
  std::vector<Matrix> inputs;  // input of each hidden layer; inputs[0] is x
  std::vector<Matrix> pre;     // pre-activation of each hidden layer
  Matrix hidden_out;           // output of the last hidden layer
  Matrix mu;
  Matrix logvar;

  Matrix sigma() const { return (0.5 * logvar.array()).exp().matrix(); }
};

struct DecoderPass {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
  Matrix hidden_out;
  Matrix output;  // sigmoid probabilities
};

EncoderPass encoder_forward(const VaeModel& model, const Matrix& x);
// Accumulates encoder parameter gradients for the given head gradients.
void encoder_backward(const VaeModel& model, const EncoderPass& pass, const Matrix& dmu, const Matrix& dlogvar,
                      LayerGrads& grads);

DecoderPass decoder_forward(const VaeModel& model, const Matrix& z);
// Accumulates decoder gradients for dL/dlogits and returns dL/dz.
Matrix decoder_backward(const VaeModel& model, const DecoderPass& pass, const Matrix& dlogits, LayerGrads& grads);

LatentGaussian encode(const VaeModel& model, std::span<const double> x);
// z = mu + sigma * eps, eps ~ N(0, I) drawn coordinate by coordinate.
Vector reparameterize(const LatentGaussian& lg, Rng& rng);
Vector decode(const VaeModel& model, std::span<const double> z);

// KL(N(mu, sigma^2) || N(0, I)).
double kl_divergence(const LatentGaussian& lg);

inline constexpr double kReconClamp = 1e-7;

// Summed Bernoulli cross-entropy; xhat is clamped to [1e-7, 1 - 1e-7].
double recon_loss(std::span<const double> x, std::span<const double> xhat);

// rows x cols standard normals, filled row by row.
Matrix draw_standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols);

struct LossAndGrads {
  double loss = 0.0;
  LayerGrads grads;
};

// Negative ELBO (recon + kl_weight * KL), averaged over the rows of x, with
// one reparameterized sample per row. The noise overload takes eps directly.
LossAndGrads vae_loss(const VaeModel& model, const Matrix& x, Rng& rng);
LossAndGrads vae_loss(const VaeModel& model, const Matrix& x, const Matrix& noise);

// Negative-ELBO terms on an existing encoder pass. Adds decoder gradients
// into `grads` and returns dL/dmu and dL/dlogvar for the encoder.
struct VaeHeadGrads {
  double loss = 0.0;
  Matrix dmu;
  Matrix dlogvar;
};
VaeHeadGrads vae_terms(const VaeModel& model, const EncoderPass& enc, const Matrix& x, const Matrix& noise,
                       LayerGrads& grads);

// encode, then one reparameterized draw.
Vector extract_features(const VaeModel& model, std::span<const double> x, Rng& rng);
// Row-wise batch version, drawing noise in row order from the same stream.
Matrix extract_features(const VaeModel& model, const Matrix& x, Rng& rng);

}  // namespace fdv
