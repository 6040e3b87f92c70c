// SPDX-License-Identifier: Apache-2.0
// Small models, splits and temp directories shared by the tests.
#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "fdv/matrix.hpp"
#include "fdv/trainer.hpp"
#include "fdv/vae.hpp"

namespace fixtures {

inline fdv::VaeModel tiny_model(int input, int hidden, int latent, std::uint64_t seed) {
  fdv::VaeConfig cfg;
  cfg.input_dim = input;
  cfg.hidden_dims = {hidden, hidden, hidden};
  cfg.latent_dim = latent;
  fdv::Rng rng(seed);
  fdv::VaeModel m = fdv::init_vae(cfg, rng);
  // Nonzero biases so no hidden unit sits at the ReLU kink by construction.
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& l : m.params.layers) {
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) l.bias(k) = u(rng);
  }
  return m;
}

inline fdv::Matrix unit_inputs(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  fdv::Matrix x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  return x;
}

inline fdv::NormalizedImage unit_image(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  fdv::NormalizedImage img;
  img.height = h;
  img.width = w;
  img.values.resize(static_cast<std::size_t>(h * w));
  for (auto& v : img.values) v = u(rng);
  return img;
}

// Genuine images cluster around one random template, forgeries around others.
inline fdv::WriterSplit tiny_split(int n_gen, int n_forg, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  fdv::WriterSplit s;
  s.writer_id = "wA";
  const fdv::NormalizedImage base = unit_image(h, w, rng);
  std::normal_distribution<double> jit(0.0, 0.05);
  for (int i = 0; i < n_gen; ++i) {
    fdv::NormalizedImage img = base;
    for (auto& v : img.values) v = std::clamp(v + jit(rng), 0.0, 1.0);
    s.genuine_train.push_back({"wA/genuine/" + std::to_string(i), img});
  }
  for (int i = 0; i < n_forg; ++i) {
    s.random_forgeries.push_back({"w" + std::to_string(i) + "/genuine/0", unit_image(h, w, rng)});
  }
  return s;
}

inline std::vector<double> flat(const fdv::LayerGrads& g) { return g.flatten(); }

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("fdv_test_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
