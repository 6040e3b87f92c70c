// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "fdv/dataset.hpp"
#include "fdv/errors.hpp"
#include "fdv/synthetic.hpp"
#include "fixtures.hpp"

using namespace fdv;
namespace fs = std::filesystem;

namespace {

double ink_fraction(const GrayImage& img) {
  std::size_t ink = 0;
  for (auto p : img.pixels) ink += p < 255 ? 1 : 0;
  return static_cast<double>(ink) / static_cast<double>(img.pixels.size());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CorpusSpec small_spec() {
  CorpusSpec s;
  s.n_writers = 3;
  s.genuine_per_writer = 4;
  s.skilled_per_writer = 2;
  s.canvas_width = 64;
  s.canvas_height = 32;
  s.seed = 5;
  return s;
}

}  // namespace

TEST(Synthetic, StyleIsPureFunctionOfSeed) {
  const WriterStyle a = gen_writer_style(7), b = gen_writer_style(7);
  ASSERT_EQ(a.strokes.size(), b.strokes.size());
  for (std::size_t k = 0; k < a.strokes.size(); ++k) {
    for (int c = 0; c < 4; ++c) {
      EXPECT_EQ(a.strokes[k].ctrl[c].x, b.strokes[k].ctrl[c].x);
      EXPECT_EQ(a.strokes[k].ctrl[c].y, b.strokes[k].ctrl[c].y);
    }
  }
  EXPECT_EQ(rasterize(a, 128, 64), rasterize(b, 128, 64));
}

TEST(Synthetic, StrokeCountsAndDistinctStyles) {
  std::set<std::vector<std::uint8_t>> seen;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const WriterStyle st = gen_writer_style(s);
    EXPECT_GE(st.strokes.size(), static_cast<std::size_t>(kMinStrokes));
    EXPECT_LE(st.strokes.size(), static_cast<std::size_t>(kMaxStrokes));
    seen.insert(rasterize(st, 64, 32).pixels);
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Synthetic, InkFractionInRange) {
  Rng rng(1);
  double lo = 1.0, hi = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const GrayImage img = render(gen_writer_style(s), 0.012, rng, 128, 64);
    const double f = ink_fraction(img);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  EXPECT_GT(lo, 0.005);
  EXPECT_LT(hi, 0.30);
}

TEST(Synthetic, ZeroJitterIsExact) {
  const WriterStyle st = gen_writer_style(3);
  Rng a(1), b(2);
  EXPECT_EQ(render(st, 0.0, a, 96, 48), render(st, 0.0, b, 96, 48));
  EXPECT_EQ(render(st, 0.0, a, 96, 48), rasterize(st, 96, 48));
  EXPECT_THROW(perturb_style(st, -1.0, a), UsageError);
}

TEST(Synthetic, SkilledFartherThanGenuineOnAverage) {
  CorpusSpec spec = small_spec();
  spec.genuine_per_writer = 10;
  spec.skilled_per_writer = 10;
  const SyntheticWriter w = gen_writer(spec, 0);
  const GrayImage ref = rasterize(w.style, spec.canvas_width, spec.canvas_height);
  auto dist = [&](const GrayImage& img) {
    double d = 0;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) d += std::abs(img.pixels[i] - ref.pixels[i]);
    return d;
  };
  double g = 0, s = 0;
  for (const auto& img : w.genuine) g += dist(img);
  for (const auto& img : w.skilled) s += dist(img);
  EXPECT_LT(g / 10, s / 10);
}

TEST(Synthetic, CorpusLayoutAndByteIdenticalRegeneration) {
  fixtures::TempDir a("corpus"), b("corpus");
  const CorpusSpec spec = small_spec();
  const CorpusSummary sum = gen_corpus(spec, a.path(), true, 1);
  gen_corpus(spec, b.path(), true, 2);
  EXPECT_EQ(sum.writers, 3);
  EXPECT_EQ(sum.genuine_files, 12);
  EXPECT_EQ(sum.skilled_files, 6);
  const Dataset da = scan_dataset(a.path());
  ASSERT_EQ(da.writers.size(), 3u);
  EXPECT_EQ(da.writers[0].id, synthetic_writer_id(0));
  for (const auto& w : da.writers) {
    EXPECT_EQ(w.genuine.size(), 4u);
    EXPECT_EQ(w.skilled.size(), 2u);
    for (const auto& img : w.genuine) {
      EXPECT_EQ(slurp(img.path), slurp(b.path() / fs::relative(img.path, a.path()))) << img.id;
    }
  }
  EXPECT_EQ(slurp(a.path() / "corpus.json"), slurp(b.path() / "corpus.json"));
  EXPECT_EQ(parse_corpus_spec(nlohmann::json::parse(slurp(a.path() / "corpus.json"))).seed, 5u);
}

TEST(Synthetic, RefusesNonEmptyOutputWithoutForce) {
  fixtures::TempDir dir("corpus");
  std::ofstream(dir.path() / "keep.txt") << "x";
  EXPECT_THROW(gen_corpus(small_spec(), dir.path(), false), UsageError);
  EXPECT_NO_THROW(gen_corpus(small_spec(), dir.path(), true));
}

TEST(Synthetic, SpecValidation) {
  EXPECT_THROW(parse_corpus_spec({{"n_writer", 3}}), UsageError);
  EXPECT_THROW(parse_corpus_spec({{"jitter_genuine", 0.05}, {"jitter_skilled", 0.01}}), UsageError);
  EXPECT_EQ(parse_corpus_spec(nlohmann::json::object()).n_writers, 20);
}
