// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fdv/disentangle.hpp"
#include "fdv/image.hpp"
#include "fdv/svm.hpp"
#include "fdv/vae.hpp"

namespace fdv {

enum class Optimizer { Sgd, Adam };

const char* to_string(Optimizer opt);
Optimizer parse_optimizer(const std::string& name);

struct TrainConfig {
  double eta1 = 1e-3;  // step on the negative ELBO
  double eta2 = 1e-3;  // step on the disentangling loss
  double margin = 1.0;
  int rounds = 2000;
  int batch_size = 16;
  std::uint64_t seed = 0;
  int latent_dim = 400;
  std::vector<int> hidden_dims{200, 200, 200};
  double kl_weight = 1.0;
  Optimizer optimizer = Optimizer::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  VaeConfig vae_config(int input_dim) const;
};

struct SampleImage {
  std::string id;
  NormalizedImage image;
};

// Images for one writer. random_forgeries are genuine signatures of other
// writers; skilled forgeries never enter the training pools.
struct WriterSplit {
  std::string writer_id;
  std::vector<SampleImage> genuine_train;
  std::vector<SampleImage> random_forgeries;
  std::vector<SampleImage> genuine_test;
  std::vector<SampleImage> skilled_test;
  std::vector<SampleImage> random_test;

  int input_dim() const;
  // Throws DataError when the disjointness invariants are broken.
  void validate() const;
};

// GG: both sides uniform with replacement from genuine_train, never the same
// index when the pool holds more than one image. GF: left from
// genuine_train, right from random_forgeries.
PairBatch sample_pair_batch(const WriterSplit& split, PairKind kind, int batch_size, Rng& rng);

struct AdamState {
  LayerGrads m;
  LayerGrads v;
  long steps = 0;
};

// Optimizer state for one model. With Adam each loss keeps its own moment
// estimates, so the update is theta -= eta1 * dir(L_VAE) + eta2 * dir(L_FD).
struct OptimizerState {
  AdamState vae;
  AdamState fd;
};

OptimizerState init_optimizer(const VaeModel& model);

// Loss and gradients of one update on a pair batch: the negative
// ELBO averaged over the 2n images present and the mean pair loss.
struct PairStep {
  double loss_vae = 0.0;
  double loss_fd = 0.0;
  LayerGrads grad_vae;
  LayerGrads grad_fd;
};

PairStep pair_step(const VaeModel& model, const PairBatch& batch, const Matrix& noise, Margin m);

void apply_update(VaeModel& model, const PairStep& step, const TrainConfig& cfg, OptimizerState& opt);

struct RoundTelemetry {
  int round = 0;
  double loss_vae_gg = 0.0;
  double loss_fd_gg = 0.0;
  double loss_vae_gf = 0.0;
  double loss_fd_gf = 0.0;

  double loss_vae() const { return 0.5 * (loss_vae_gg + loss_vae_gf); }
  double loss_fd() const { return 0.5 * (loss_fd_gg + loss_fd_gf); }
};

// One round: sample B_GG, update; sample B_GF, update. Random draws per
// update, in order: pair indices, then the 2n x latent noise matrix.
RoundTelemetry train_round(VaeModel& model, const WriterSplit& split, const TrainConfig& cfg, Rng& rng,
                           OptimizerState& opt, int round_index = 0);

struct TrainedWriter {
  VaeModel vae;
  SvmModel svm;
  std::vector<RoundTelemetry> telemetry;
};

using RoundObserver = std::function<void(const RoundTelemetry&)>;

// Rounds of train_round, then an SVM on extracted features of genuine_train
// (+1) and random_forgeries (-1). The whole run draws from a single stream
// seeded with cfg.seed.
TrainedWriter train_writer(const WriterSplit& split, const TrainConfig& cfg, const SvmConfig& svm_cfg,
                           const RoundObserver& observer = {});

// CSV with header "round,loss_vae,loss_fd".
std::string telemetry_csv(const std::vector<RoundTelemetry>& telemetry);

}  // namespace fdv
