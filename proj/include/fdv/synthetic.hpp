// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fdv/image.hpp"
#include "fdv/rng.hpp"

namespace fdv {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Cubic Bezier in the normalized [0,1]^2 canvas.
struct Stroke {
  std::array<Point, 4> ctrl;
  double width = 0.02;  // pen width as a fraction of canvas height
  double ink = 30.0;    // gray level of fully covered pixels (0 = black)
};

struct WriterStyle {
  std::uint64_t seed = 0;
  std::vector<Stroke> strokes;
};

inline constexpr int kMinStrokes = 3;
inline constexpr int kMaxStrokes = 7;

// 3-7 strokes laid out left to right; control points span at least half
// the canvas width. Pure function of the seed.
WriterStyle gen_writer_style(std::uint64_t seed);

// Copy of `style` with every control point moved by N(0, jitter^2) per axis.
WriterStyle perturb_style(const WriterStyle& style, double jitter, Rng& rng);

// Antialiased rasterization of the strokes onto a white canvas.
GrayImage rasterize(const WriterStyle& style, int canvas_width, int canvas_height);

// perturb_style then rasterize.
GrayImage render(const WriterStyle& style, double jitter, Rng& rng, int canvas_width = 256, int canvas_height = 128);

struct CorpusSpec {
  int n_writers = 20;
  int genuine_per_writer = 15;
  int skilled_per_writer = 10;
  double jitter_genuine = 0.012;
  // Scale of the forger's error when re-estimating the target style; each
  // forgery is then rendered with jitter_genuine on top of that estimate.
  double jitter_skilled = 0.035;
  int canvas_width = 256;
  int canvas_height = 128;
  std::uint64_t seed = 1;

  void validate() const;
};

CorpusSpec parse_corpus_spec(const nlohmann::json& doc);
CorpusSpec load_corpus_spec(const std::filesystem::path& path);
nlohmann::json to_json(const CorpusSpec& spec);

std::string synthetic_writer_id(int index);

// The images of one synthetic writer, in file order.
struct SyntheticWriter {
  std::string id;
  WriterStyle style;
  std::vector<GrayImage> genuine;
  std::vector<GrayImage> skilled;
};

SyntheticWriter gen_writer(const CorpusSpec& spec, int index);

struct CorpusSummary {
  int writers = 0;
  int genuine_files = 0;
  int skilled_files = 0;
};

// Writes <out>/writers/<id>/{genuine,skilled}/NNN.png and <out>/corpus.json.
// Refuses a nonempty `out` unless force is set, in which case the previous
// writers/ tree is replaced.
CorpusSummary gen_corpus(const CorpusSpec& spec, const std::filesystem::path& out, bool force, int jobs = 1);

}  // namespace fdv
