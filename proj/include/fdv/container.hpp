// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fdv/preprocess.hpp"
#include "fdv/svm.hpp"
#include "fdv/trainer.hpp"
#include "fdv/vae.hpp"

namespace fdv {

inline constexpr int kContainerVersion = 1;

// Everything needed to verify a signature against one enrolled writer.
//
// File layout:
//   "FDV1"                      4 bytes
//   header length               uint32, little endian
//   header                      UTF-8 JSON (config, dims, seeds, hyperparameters)
//   VAE section                 float64 LE, every layer's weight (row-major) then bias, in layer order
//   SVM section                 float64 LE: bias, gamma, dual coefficients, support vectors (row-major)
struct ModelContainer {
  std::string writer_id;
  PreprocessConfig preprocess{};
  TrainConfig train{};
  SvmConfig svm_config{};
  std::uint64_t score_seed = 0;
  VaeModel vae;
  SvmModel svm;
};

std::string serialize_container(const ModelContainer& c);
ModelContainer parse_container(std::string_view bytes);

void save_container(const std::filesystem::path& path, const ModelContainer& c);
ModelContainer load_container(const std::filesystem::path& path);

}  // namespace fdv
