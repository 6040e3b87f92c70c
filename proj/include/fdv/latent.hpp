// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "fdv/config.hpp"
#include "fdv/matrix.hpp"
#include "fdv/trainer.hpp"

namespace fdv {

// Extracted features of the three sample kinds, one per row.
struct LatentPoints {
  Matrix genuine;
  Matrix skilled;
  Matrix random;
};

// (smallest distance between class centroids) / (largest RMS distance of a
// class's points to its own centroid).
double separation_score(const LatentPoints& points);

// Standalone SVG scatter plot with one marker style and legend entry per class.
std::string latent_svg(const LatentPoints& points, const std::string& title);

struct LatentPlot {
  LatentPoints points;
  double separation = 0.0;
  std::string svg;
};

// Trains the writer's model (latent_dim must be 2) and plots features of its
// held-out genuine signatures, skilled forgeries and random forgeries (the
// random test pool when present, otherwise the training pool). with_fd =
// false sets eta2 = 0.
LatentPlot latent_plot(const WriterSplit& split, const RunConfig& cfg, bool with_fd = true);

}  // namespace fdv
