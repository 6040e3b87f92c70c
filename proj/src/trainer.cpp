// SPDX-License-Identifier: Apache-2.0
#include "fdv/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "fdv/errors.hpp"

namespace fdv {

const char* to_string(Optimizer opt) { return opt == Optimizer::Sgd ? "sgd" : "adam"; }

Optimizer parse_optimizer(const std::string& name) {
  if (name == "sgd") return Optimizer::Sgd;
  if (name == "adam") return Optimizer::Adam;
  throw UsageError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
  if (!(eta1 >= 0.0) || !(eta2 >= 0.0) || !std::isfinite(eta1) || !std::isfinite(eta2)) {
    throw UsageError("train: eta1 and eta2 must be finite and non-negative");
  }
  Margin{margin};
  if (rounds < 1) throw UsageError("train: rounds must be >= 1");
  if (batch_size < 1) throw UsageError("train: batch_size must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw UsageError("train: invalid Adam hyperparameters");
  }
}

VaeConfig TrainConfig::vae_config(int input_dim) const {
  VaeConfig v;
  v.input_dim = input_dim;
  v.hidden_dims = hidden_dims;
  v.latent_dim = latent_dim;
  v.kl_weight = kl_weight;
  v.validate();
  return v;
}

int WriterSplit::input_dim() const {
  if (genuine_train.empty()) throw DataError("writer " + writer_id + ": no genuine training images");
  return static_cast<int>(genuine_train.front().image.size());
}

void WriterSplit::validate() const {
  std::set<std::string> train_ids;
  for (const auto& s : genuine_train) train_ids.insert(s.id);
  for (const auto& s : genuine_test) {
    if (train_ids.count(s.id) != 0) throw DataError("writer " + writer_id + ": " + s.id + " is both train and test");
  }
  const std::string own_prefix = writer_id + "/";
  for (const auto& s : random_forgeries) {
    if (s.id.rfind(own_prefix, 0) == 0) {
      throw DataError("writer " + writer_id + ": random forgery pool contains own image " + s.id);
    }
  }
  const auto dim = static_cast<std::size_t>(input_dim());
  for (const auto* pool : {&genuine_train, &random_forgeries, &genuine_test, &skilled_test, &random_test}) {
    for (const auto& s : *pool) {
      if (s.image.size() != dim) throw DataError("writer " + writer_id + ": image size mismatch for " + s.id);
    }
  }
}

namespace {

void copy_row(Matrix& dst, Eigen::Index row, const NormalizedImage& img) {
  std::copy(img.values.begin(), img.values.end(), dst.data() + row * dst.cols());
}

}  // namespace

PairBatch sample_pair_batch(const WriterSplit& split, PairKind kind, int batch_size, Rng& rng) {
  if (batch_size < 1) throw UsageError("sample_pair_batch: batch_size must be >= 1");
  const auto& genuine = split.genuine_train;
  if (genuine.empty()) throw DataError("writer " + split.writer_id + ": genuine pool is empty");
  if (kind == PairKind::GF && split.random_forgeries.empty()) {
    throw DataError("writer " + split.writer_id + ": random forgery pool is empty");
  }
  const auto dim = static_cast<Eigen::Index>(genuine.front().image.size());
  PairBatch b;
  b.kind = kind;
  b.left.resize(batch_size, dim);
  b.right.resize(batch_size, dim);
  b.same_label.assign(static_cast<std::size_t>(batch_size), kind == PairKind::GG);

  using Dist = std::uniform_int_distribution<std::size_t>;
  for (int k = 0; k < batch_size; ++k) {
    const std::size_t i = Dist(0, genuine.size() - 1)(rng);
    std::size_t j = 0;
    const SampleImage* right = nullptr;
    if (kind == PairKind::GG) {
      if (genuine.size() > 1) {
        j = Dist(0, genuine.size() - 2)(rng);
        if (j >= i) ++j;
      } else {
        j = i;
      }
      right = &genuine[j];
    } else {
      j = Dist(0, split.random_forgeries.size() - 1)(rng);
      right = &split.random_forgeries[j];
    }
    copy_row(b.left, k, genuine[i].image);
    copy_row(b.right, k, right->image);
    b.left_index.push_back(i);
    b.right_index.push_back(j);
  }
  return b;
}

OptimizerState init_optimizer(const VaeModel& model) {
  OptimizerState s;
  s.vae.m = LayerGrads::zeros_like(model.params);
  s.vae.v = LayerGrads::zeros_like(model.params);
  s.fd.m = LayerGrads::zeros_like(model.params);
  s.fd.v = LayerGrads::zeros_like(model.params);
  return s;
}

PairStep pair_step(const VaeModel& model, const PairBatch& batch, const Matrix& noise, Margin m) {
  const Matrix x = stack_pairs(batch);
  const EncoderPass enc = encoder_forward(model, x);

  PairStep step;
  step.grad_vae = LayerGrads::zeros_like(model.params);
  const VaeHeadGrads vae = vae_terms(model, enc, x, noise, step.grad_vae);
  encoder_backward(model, enc, vae.dmu, vae.dlogvar, step.grad_vae);
  step.loss_vae = vae.loss;

  step.grad_fd = LayerGrads::zeros_like(model.params);
  const FdHeadGrads fd = fd_terms(enc.mu, enc.logvar, batch.same_label, m);
  encoder_backward(model, enc, fd.dmu, fd.dlogvar, step.grad_fd);
  step.loss_fd = fd.loss;
  return step;
}

namespace {

// Layers at or past layer_end are left alone. For the FD loss those are the
// decoder layers: their gradient is identically zero, so m, v and the step
// would stay exactly zero anyway.
void adam_apply(ParamSet& params, const LayerGrads& g, double eta, const TrainConfig& cfg, AdamState& st,
                std::size_t layer_end) {
  ++st.steps;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.steps));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.steps));
  for (std::size_t l = 0; l < layer_end; ++l) {
    auto step = [&](auto& p, const auto& grad, auto& m, auto& v) {
      m = b1 * m + (1.0 - b1) * grad;
      v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
      p.array() -= eta * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_eps);
    };
    step(params.layers[l].weight, g.layers[l].weight, st.m.layers[l].weight, st.v.layers[l].weight);
    step(params.layers[l].bias, g.layers[l].bias, st.m.layers[l].bias, st.v.layers[l].bias);
  }
}

}  // namespace

void apply_update(VaeModel& model, const PairStep& step, const TrainConfig& cfg, OptimizerState& opt) {
  if (cfg.optimizer == Optimizer::Sgd) {
    if (cfg.eta1 != 0.0) model.params.axpy(-cfg.eta1, step.grad_vae);
    if (cfg.eta2 != 0.0) model.params.axpy(-cfg.eta2, step.grad_fd);
  } else {
    if (cfg.eta1 != 0.0) adam_apply(model.params, step.grad_vae, cfg.eta1, cfg, opt.vae, model.params.layers.size());
    if (cfg.eta2 != 0.0) adam_apply(model.params, step.grad_fd, cfg.eta2, cfg, opt.fd, model.decoder_begin());
  }
  if (!model.params.all_finite()) throw NumericError("parameters became non-finite after update");
}

RoundTelemetry train_round(VaeModel& model, const WriterSplit& split, const TrainConfig& cfg, Rng& rng,
                           OptimizerState& opt, int round_index) {
  const Margin m{cfg.margin};
  RoundTelemetry t;
  t.round = round_index;
  auto update = [&](PairKind kind, double& loss_vae, double& loss_fd) {
    const PairBatch batch = sample_pair_batch(split, kind, cfg.batch_size, rng);
    const Matrix noise = draw_standard_normal(rng, 2 * static_cast<Eigen::Index>(batch.size()), model.config.latent_dim);
    try {
      const PairStep step = pair_step(model, batch, noise, m);
      loss_vae = step.loss_vae;
      loss_fd = step.loss_fd;
      apply_update(model, step, cfg, opt);
    } catch (const NumericError& e) {
      std::ostringstream msg;
      msg << "writer " << split.writer_id << ", round " << round_index << " (" << to_string(kind)
          << " update): " << e.what() << "; last telemetry loss_vae=" << t.loss_vae_gg << " loss_fd=" << t.loss_fd_gg;
      throw NumericError(msg.str());
    }
  };
  update(PairKind::GG, t.loss_vae_gg, t.loss_fd_gg);
  update(PairKind::GF, t.loss_vae_gf, t.loss_fd_gf);
  return t;
}

TrainedWriter train_writer(const WriterSplit& split, const TrainConfig& cfg, const SvmConfig& svm_cfg,
                           const RoundObserver& observer) {
  cfg.validate();
  svm_cfg.validate();
  split.validate();
  if (split.random_forgeries.empty()) throw DataError("writer " + split.writer_id + ": random forgery pool is empty");

  Rng rng(cfg.seed);
  TrainedWriter out;
  out.vae = init_vae(cfg.vae_config(split.input_dim()), rng);
  OptimizerState opt = init_optimizer(out.vae);
  out.telemetry.reserve(static_cast<std::size_t>(cfg.rounds));
  for (int r = 0; r < cfg.rounds; ++r) {
    out.telemetry.push_back(train_round(out.vae, split, cfg, rng, opt, r));
    if (observer) observer(out.telemetry.back());
  }

  const std::size_t n_pos = split.genuine_train.size();
  const std::size_t n_neg = split.random_forgeries.size();
  Matrix x(static_cast<Eigen::Index>(n_pos + n_neg), out.vae.config.input_dim);
  std::vector<int> labels;
  labels.reserve(n_pos + n_neg);
  Eigen::Index row = 0;
  for (const auto& s : split.genuine_train) {
    copy_row(x, row++, s.image);
    labels.push_back(1);
  }
  for (const auto& s : split.random_forgeries) {
    copy_row(x, row++, s.image);
    labels.push_back(-1);
  }
  const Matrix features = extract_features(out.vae, x, rng);
  out.svm = smo_train(features, labels, svm_cfg);
  return out;
}

std::string telemetry_csv(const std::vector<RoundTelemetry>& telemetry) {
  std::string csv = "round,loss_vae,loss_fd\n";
  char line[128];
  for (const auto& t : telemetry) {
    std::snprintf(line, sizeof line, "%d,%.10g,%.10g\n", t.round, t.loss_vae(), t.loss_fd());
    csv += line;
  }
  return csv;
}

}  // namespace fdv
