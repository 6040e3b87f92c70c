// SPDX-License-Identifier: Apache-2.0
#include "fdv/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fdv/errors.hpp"
#include "fdv/eval.hpp"
#include "fdv/image_io.hpp"

namespace fdv {

namespace fs = std::filesystem;
using nlohmann::json;

WriterStyle gen_writer_style(std::uint64_t seed) {
  Rng rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  WriterStyle style;
  style.seed = seed;
  const int n = std::uniform_int_distribution<int>(kMinStrokes, kMaxStrokes)(rng);
  const double left = uni(0.04, 0.18);
  const double right = uni(0.78, 0.96);
  const double ink = uni(10.0, 70.0);
  const double width = uni(0.018, 0.035);
  const double step = (right - left) / n;
  double y_prev = uni(0.35, 0.65);
  for (int s = 0; s < n; ++s) {
    // Neighbouring strokes overlap a little, like connected handwriting.
    const double x0 = left + s * step - uni(0.0, 0.3) * step;
    const double x3 = left + (s + 1) * step + uni(0.0, 0.3) * step;
    Stroke st;
    st.ctrl[0] = {std::clamp(x0, 0.02, 0.98), y_prev};
    st.ctrl[1] = {std::clamp(uni(x0 - 0.5 * step, x3 + 0.5 * step), 0.02, 0.98), uni(0.05, 0.95)};
    st.ctrl[2] = {std::clamp(uni(x0 - 0.5 * step, x3 + 0.5 * step), 0.02, 0.98), uni(0.05, 0.95)};
    const double y3 = uni(0.25, 0.75);
    st.ctrl[3] = {std::clamp(x3, 0.02, 0.98), y3};
    st.width = width * uni(0.8, 1.2);
    st.ink = ink;
    style.strokes.push_back(st);
    y_prev = y3;
  }
  return style;
}

WriterStyle perturb_style(const WriterStyle& style, double jitter, Rng& rng) {
  if (!(jitter >= 0.0)) throw UsageError("render: jitter must be >= 0");
  WriterStyle out = style;
  if (jitter == 0.0) return out;
  std::normal_distribution<double> normal(0.0, jitter);
  for (auto& st : out.strokes) {
    for (auto& p : st.ctrl) {
      p.x += normal(rng);
      p.y += normal(rng);
    }
  }
  return out;
}

namespace {

Point bezier(const Stroke& s, double t) {
  const double u = 1.0 - t;
  const double a = u * u * u, b = 3 * u * u * t, c = 3 * u * t * t, d = t * t * t;
  return {a * s.ctrl[0].x + b * s.ctrl[1].x + c * s.ctrl[2].x + d * s.ctrl[3].x,
          a * s.ctrl[0].y + b * s.ctrl[1].y + c * s.ctrl[2].y + d * s.ctrl[3].y};
}

double segment_distance(double px, double py, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - px, ey = a.y + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace

GrayImage rasterize(const WriterStyle& style, int canvas_width, int canvas_height) {
  GrayImage img(canvas_width, canvas_height, 255);
  // Coverage of each pixel, darkest stroke wins.
  std::vector<double> shade(img.pixels.size(), 255.0);
  constexpr int kSamples = 48;
  for (const auto& st : style.strokes) {
    const double half = 0.5 * st.width * canvas_height;
    Point prev = bezier(st, 0.0);
    prev = {prev.x * canvas_width, prev.y * canvas_height};
    for (int k = 1; k <= kSamples; ++k) {
      Point cur = bezier(st, static_cast<double>(k) / kSamples);
      cur = {cur.x * canvas_width, cur.y * canvas_height};
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min(prev.x, cur.x) - half - 1)));
      const int x1 = std::min(canvas_width - 1, static_cast<int>(std::ceil(std::max(prev.x, cur.x) + half + 1)));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min(prev.y, cur.y) - half - 1)));
      const int y1 = std::min(canvas_height - 1, static_cast<int>(std::ceil(std::max(prev.y, cur.y) + half + 1)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double d = segment_distance(x + 0.5, y + 0.5, prev, cur);
          const double cover = std::clamp(half + 0.5 - d, 0.0, 1.0);
          if (cover <= 0.0) continue;
          double& px = shade[static_cast<std::size_t>(y) * canvas_width + x];
          px = std::min(px, 255.0 - cover * (255.0 - st.ink));
        }
      }
      prev = cur;
    }
  }
  for (std::size_t i = 0; i < shade.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(shade[i]), 0L, 255L));
  }
  return img;
}

GrayImage render(const WriterStyle& style, double jitter, Rng& rng, int canvas_width, int canvas_height) {
  return rasterize(perturb_style(style, jitter, rng), canvas_width, canvas_height);
}

void CorpusSpec::validate() const {
  if (n_writers < 1 || genuine_per_writer < 1 || skilled_per_writer < 0) {
    throw UsageError("corpus spec: writer and image counts must be positive");
  }
  if (!(jitter_genuine > 0.0 && jitter_genuine < jitter_skilled)) {
    throw UsageError("corpus spec: requires 0 < jitter_genuine < jitter_skilled");
  }
  if (canvas_width < 16 || canvas_height < 16) throw UsageError("corpus spec: canvas must be at least 16x16");
}

CorpusSpec parse_corpus_spec(const json& doc) {
  static const char* allowed[] = {"schema_version", "n_writers",    "genuine_per_writer", "skilled_per_writer",
                                  "jitter_genuine", "jitter_skilled", "canvas_width",     "canvas_height",
                                  "seed"};
  if (!doc.is_object()) throw UsageError("corpus spec must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (std::find(std::begin(allowed), std::end(allowed), key) == std::end(allowed)) {
      throw UsageError("corpus spec: unknown key '" + key + "'");
    }
  }
  if (doc.value("schema_version", 1) != 1) throw UsageError("corpus spec: unsupported schema_version");
  CorpusSpec s;
  try {
    s.n_writers = doc.value("n_writers", s.n_writers);
    s.genuine_per_writer = doc.value("genuine_per_writer", s.genuine_per_writer);
    s.skilled_per_writer = doc.value("skilled_per_writer", s.skilled_per_writer);
    s.jitter_genuine = doc.value("jitter_genuine", s.jitter_genuine);
    s.jitter_skilled = doc.value("jitter_skilled", s.jitter_skilled);
    s.canvas_width = doc.value("canvas_width", s.canvas_width);
    s.canvas_height = doc.value("canvas_height", s.canvas_height);
    s.seed = doc.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw UsageError(std::string("corpus spec: bad value: ") + e.what());
  }
  s.validate();
  return s;
}

CorpusSpec load_corpus_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open corpus spec " + path.string());
  try {
    return parse_corpus_spec(json::parse(in));
  } catch (const json::parse_error& e) {
    throw UsageError("corpus spec " + path.string() + " is not valid JSON: " + e.what());
  }
}

json to_json(const CorpusSpec& s) {
  return {{"schema_version", 1},
          {"n_writers", s.n_writers},
          {"genuine_per_writer", s.genuine_per_writer},
          {"skilled_per_writer", s.skilled_per_writer},
          {"jitter_genuine", s.jitter_genuine},
          {"jitter_skilled", s.jitter_skilled},
          {"canvas_width", s.canvas_width},
          {"canvas_height", s.canvas_height},
          {"seed", s.seed}};
}

std::string synthetic_writer_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%03d", index);
  return buf;
}

SyntheticWriter gen_writer(const CorpusSpec& spec, int index) {
  SyntheticWriter w;
  w.id = synthetic_writer_id(index);
  const std::uint64_t style_seed = stream_seed(spec.seed, w.id);
  w.style = gen_writer_style(style_seed);
  Rng genuine_rng(mix64(style_seed ^ 0x67656e75696e65ULL));
  for (int i = 0; i < spec.genuine_per_writer; ++i) {
    w.genuine.push_back(render(w.style, spec.jitter_genuine, genuine_rng, spec.canvas_width, spec.canvas_height));
  }
  Rng forger_rng(mix64(style_seed ^ 0x736b696c6c6564ULL));
  for (int i = 0; i < spec.skilled_per_writer; ++i) {
    // The forger re-estimates the style for every attempt.
    const WriterStyle estimate = perturb_style(w.style, spec.jitter_skilled, forger_rng);
    w.skilled.push_back(render(estimate, spec.jitter_genuine, forger_rng, spec.canvas_width, spec.canvas_height));
  }
  return w;
}

CorpusSummary gen_corpus(const CorpusSpec& spec, const fs::path& out, bool force, int jobs) {
  spec.validate();
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!force) throw UsageError("output directory is not empty (use --force): " + out.string());
    fs::remove_all(out / "writers");
  }
  fs::create_directories(out / "writers");

  CorpusSummary summary;
  summary.writers = spec.n_writers;
  summary.genuine_files = spec.n_writers * spec.genuine_per_writer;
  summary.skilled_files = spec.n_writers * spec.skilled_per_writer;

  parallel_for(static_cast<std::size_t>(spec.n_writers), jobs, [&](std::size_t i) {
    const SyntheticWriter w = gen_writer(spec, static_cast<int>(i));
    const fs::path dir = out / "writers" / w.id;
    fs::create_directories(dir / "genuine");
    fs::create_directories(dir / "skilled");
    char name[32];
    for (std::size_t k = 0; k < w.genuine.size(); ++k) {
      std::snprintf(name, sizeof name, "%03zu.png", k);
      write_png(dir / "genuine" / name, w.genuine[k]);
    }
    for (std::size_t k = 0; k < w.skilled.size(); ++k) {
      std::snprintf(name, sizeof name, "%03zu.png", k);
      write_png(dir / "skilled" / name, w.skilled[k]);
    }
  });
  write_file_atomic(out / "corpus.json", to_json(spec).dump(2) + "\n");
  return summary;
}

}  // namespace fdv
