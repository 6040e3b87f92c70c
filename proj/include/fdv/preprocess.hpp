// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fdv/image.hpp"

namespace fdv {

struct OtsuResult {
  int level = 0;
  // Single-valued histogram: there is no foreground/background split.
  bool degenerate = false;
};

// Level t maximizing the between-class variance of the 256-bin histogram,
// where the classes are {p <= t} and {p > t}. Ties go to the smallest t.
OtsuResult otsu_threshold(const GrayImage& img);

// Pixels brighter than t are set to white, the rest keep their intensity,
// then the whole image is inverted so the background becomes 0. With
// strict_binary the kept pixels are forced to full ink instead.
GrayImage binarize_invert(const GrayImage& img, int t, bool strict_binary = false);

struct TargetSize {
  int height = 64;
  int width = 64;
};

// Crops to the bounding box of nonzero pixels, pads symmetrically to the
// target aspect ratio, resamples with a tent (bilinear) filter whose support
// widens when downscaling, and divides by 255.
NormalizedImage resize_normalize(const GrayImage& img, TargetSize target);

struct PreprocessConfig {
  TargetSize target{};
  bool strict_binary = false;
};

// otsu -> binarize_invert -> resize_normalize.
NormalizedImage preprocess(const GrayImage& img, const PreprocessConfig& cfg);

}  // namespace fdv
