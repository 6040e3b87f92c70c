// SPDX-License-Identifier: Apache-2.0
#include "fdv/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "fdv/errors.hpp"

namespace fdv {

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
  if (w < 1 || h < 1) {
    throw UsageError("GrayImage dimensions must be positive, got " + std::to_string(w) + "x" +
                     std::to_string(h));
  }
}

OtsuResult otsu_threshold(const GrayImage& img) {
  if (img.empty()) throw UsageError("otsu_threshold: empty image");

  std::array<std::uint64_t, 256> hist{};
  for (auto p : img.pixels) ++hist[p];

  int occupied = 0;
  int only = 0;
  for (int v = 0; v < 256; ++v) {
    if (hist[v] != 0) {
      ++occupied;
      only = v;
    }
  }
  if (occupied == 1) return {only, true};

  const double total = static_cast<double>(img.pixels.size());
  double total_sum = 0.0;
  for (int v = 0; v < 256; ++v) total_sum += static_cast<double>(v) * static_cast<double>(hist[v]);

  double count_lo = 0.0;
  double sum_lo = 0.0;
  double best = -1.0;
  int best_t = 0;
  for (int t = 0; t < 256; ++t) {
    count_lo += static_cast<double>(hist[t]);
    sum_lo += static_cast<double>(t) * static_cast<double>(hist[t]);
    const double count_hi = total - count_lo;
    double between = 0.0;
    if (count_lo > 0.0 && count_hi > 0.0) {
      const double w0 = count_lo / total;
      const double w1 = count_hi / total;
      const double diff = sum_lo / count_lo - (total_sum - sum_lo) / count_hi;
      between = w0 * w1 * diff * diff;
    }
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return {best_t, false};
}

GrayImage binarize_invert(const GrayImage& img, int t, bool strict_binary) {
  if (t < 0 || t > 255) throw UsageError("binarize_invert: threshold out of range: " + std::to_string(t));
  GrayImage out = img;
  for (auto& p : out.pixels) {
    int v = p;
    if (v > t) {
      v = 255;
    } else if (strict_binary) {
      v = 0;
    }
    p = static_cast<std::uint8_t>(255 - v);
  }
  return out;
}

namespace {

struct Tap {
  int first = 0;
  std::vector<double> weights;
};

// Per-output-sample tent filter taps along one axis, PIL style: the tent
// is stretched by the scale factor when downsampling and is a plain linear
// interpolation otherwise.
std::vector<Tap> tent_taps(int n_in, int n_out) {
  const double scale = static_cast<double>(n_in) / static_cast<double>(n_out);
  const double stretch = std::max(scale, 1.0);
  std::vector<Tap> taps(static_cast<std::size_t>(n_out));
  for (int i = 0; i < n_out; ++i) {
    const double center = (i + 0.5) * scale;
    const int lo = std::max(0, static_cast<int>(std::floor(center - stretch)));
    const int hi = std::min(n_in - 1, static_cast<int>(std::ceil(center + stretch)));
    Tap& tap = taps[static_cast<std::size_t>(i)];
    tap.first = lo;
    double sum = 0.0;
    for (int k = lo; k <= hi; ++k) {
      const double w = std::max(0.0, 1.0 - std::abs((k + 0.5 - center) / stretch));
      tap.weights.push_back(w);
      sum += w;
    }
    if (sum > 0.0) {
      for (auto& w : tap.weights) w /= sum;
    } else {
      // Upsampling near the border can leave every tap at zero weight.
      const int nearest = std::clamp(static_cast<int>(center), 0, n_in - 1);
      tap.first = nearest;
      tap.weights.assign(1, 1.0);
    }
  }
  return taps;
}

}  // namespace

NormalizedImage resize_normalize(const GrayImage& img, TargetSize target) {
  if (target.height < 1 || target.width < 1) throw UsageError("resize_normalize: target size must be positive");
  NormalizedImage out;
  out.height = target.height;
  out.width = target.width;
  out.values.assign(static_cast<std::size_t>(target.height) * static_cast<std::size_t>(target.width), 0.0);

  int x0 = img.width, y0 = img.height, x1 = -1, y1 = -1;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.at(x, y) != 0) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) return out;

  const int crop_w = x1 - x0 + 1;
  const int crop_h = y1 - y0 + 1;
  // Pad the short side so the crop matches the target aspect ratio.
  int pad_w = crop_w;
  int pad_h = crop_h;
  const double target_aspect = static_cast<double>(target.width) / target.height;
  if (static_cast<double>(crop_w) / crop_h > target_aspect) {
    pad_h = std::max(crop_h, static_cast<int>(std::lround(crop_w / target_aspect)));
  } else {
    pad_w = std::max(crop_w, static_cast<int>(std::lround(crop_h * target_aspect)));
  }
  const int off_x = (pad_w - crop_w) / 2;
  const int off_y = (pad_h - crop_h) / 2;

  std::vector<double> padded(static_cast<std::size_t>(pad_w) * static_cast<std::size_t>(pad_h), 0.0);
  for (int y = 0; y < crop_h; ++y) {
    for (int x = 0; x < crop_w; ++x) {
      padded[static_cast<std::size_t>(y + off_y) * pad_w + (x + off_x)] = img.at(x0 + x, y0 + y);
    }
  }

  // Separable pass: rows first, then columns.
  const auto col_taps = tent_taps(pad_w, target.width);
  const auto row_taps = tent_taps(pad_h, target.height);
  std::vector<double> horiz(static_cast<std::size_t>(pad_h) * static_cast<std::size_t>(target.width), 0.0);
  for (int y = 0; y < pad_h; ++y) {
    const double* src = padded.data() + static_cast<std::size_t>(y) * pad_w;
    for (int x = 0; x < target.width; ++x) {
      const Tap& tap = col_taps[static_cast<std::size_t>(x)];
      double acc = 0.0;
      for (std::size_t k = 0; k < tap.weights.size(); ++k) acc += tap.weights[k] * src[tap.first + static_cast<int>(k)];
      horiz[static_cast<std::size_t>(y) * target.width + x] = acc;
    }
  }
  for (int y = 0; y < target.height; ++y) {
    const Tap& tap = row_taps[static_cast<std::size_t>(y)];
    for (int x = 0; x < target.width; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < tap.weights.size(); ++k) {
        acc += tap.weights[k] * horiz[static_cast<std::size_t>(tap.first + static_cast<int>(k)) * target.width + x];
      }
      out.values[static_cast<std::size_t>(y) * target.width + x] = std::clamp(acc / 255.0, 0.0, 1.0);
    }
  }
  return out;
}

NormalizedImage preprocess(const GrayImage& img, const PreprocessConfig& cfg) {
  const OtsuResult t = otsu_threshold(img);
  if (t.degenerate) {
    NormalizedImage blank;
    blank.height = cfg.target.height;
    blank.width = cfg.target.width;
    blank.values.assign(static_cast<std::size_t>(blank.height) * static_cast<std::size_t>(blank.width), 0.0);
    return blank;
  }
  return resize_normalize(binarize_invert(img, t.level, cfg.strict_binary), cfg.target);
}

}  // namespace fdv
