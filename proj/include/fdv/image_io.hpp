// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string_view>

#include "fdv/image.hpp"

namespace fdv {

// Loads PNG (any bit depth / color type) or binary PGM (P5). Color pixels
// are reduced with luma = round(0.299 R + 0.587 G + 0.114 B); alpha is
// composited over white. Throws DataError naming the file on failure.
GrayImage read_image(const std::filesystem::path& path);

GrayImage read_png(const std::filesystem::path& path);
GrayImage read_pgm(const std::filesystem::path& path);

// Writers go through a temporary file and a rename.
void write_png(const std::filesystem::path& path, const GrayImage& img);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

// Writes bytes to path.tmp then renames over path.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace fdv
