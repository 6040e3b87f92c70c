// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "fdv/dataset.hpp"
#include "fdv/preprocess.hpp"
#include "fdv/svm.hpp"
#include "fdv/trainer.hpp"

namespace fdv {

inline constexpr int kRunConfigSchema = 1;

// Everything a run depends on. `seed` is the master seed; each writer trains
// on stream_seed(seed, writer_id) and scoring draws use `seed` itself.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string seed_source = "config";  // or "FDV_SEED"
  PreprocessConfig preprocess{};
  TrainConfig train{};
  SvmConfig svm{};
  ProtocolConfig protocol{};

  void validate() const;
  TrainConfig train_for(const std::string& writer_id) const;
};

// Parses a JSON run config:
//   { "schema_version": 1, "seed": ..., "preprocess": {...}, "model": {...},
//     "train": {...}, "svm": {...}, "protocol": {...} }
// Every section and key is optional; unknown keys are rejected with UsageError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

// Applies FDV_SEED from the environment when set.
void apply_seed_override(RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace fdv
