// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace fdv {

// 8-bit grayscale raster, row-major, 0 = black and 255 = white.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 255);

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const { return pixels.empty(); }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Fixed-size network input: values in [0,1], 0 = background (no ink).
struct NormalizedImage {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  friend bool operator==(const NormalizedImage&, const NormalizedImage&) = default;
};

}  // namespace fdv
