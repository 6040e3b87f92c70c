// SPDX-License-Identifier: Apache-2.0
#include "fdv/latent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "fdv/errors.hpp"

namespace fdv {

double separation_score(const LatentPoints& p) {
  const Matrix* classes[] = {&p.genuine, &p.skilled, &p.random};
  std::vector<RowVector> centroids;
  double spread = 0.0;
  for (const Matrix* m : classes) {
    if (m->rows() == 0) throw UsageError("separation_score: every class needs at least one point");
    RowVector c = m->colwise().mean();
    spread = std::max(spread, std::sqrt((m->rowwise() - c).rowwise().squaredNorm().mean()));
    centroids.push_back(std::move(c));
  }
  double inter = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < centroids.size(); ++a) {
    for (std::size_t b = a + 1; b < centroids.size(); ++b) inter = std::min(inter, (centroids[a] - centroids[b]).norm());
  }
  if (spread == 0.0) return inter > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return inter / spread;
}

std::string latent_svg(const LatentPoints& p, const std::string& title) {
  if (p.genuine.cols() != 2 || p.skilled.cols() != 2 || p.random.cols() != 2) {
    throw UsageError("latent_svg: features must be 2-dimensional");
  }
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo, y_lo = x_lo, y_hi = -x_lo;
  for (const Matrix* m : {&p.genuine, &p.skilled, &p.random}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      x_lo = std::min(x_lo, (*m)(i, 0));
      x_hi = std::max(x_hi, (*m)(i, 0));
      y_lo = std::min(y_lo, (*m)(i, 1));
      y_hi = std::max(y_hi, (*m)(i, 1));
    }
  }
  if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
  if (!(y_hi > y_lo)) y_hi = y_lo + 1.0;

  constexpr double kW = 480, kH = 480, kPad = 40, kLegend = 150;
  auto sx = [&](double x) { return kPad + (x - x_lo) / (x_hi - x_lo) * (kW - 2 * kPad); };
  auto sy = [&](double y) { return kH - kPad - (y - y_lo) / (y_hi - y_lo) * (kH - 2 * kPad); };

  std::ostringstream svg;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                kW + kLegend, kH, kW + kLegend, kH);
  svg << buf;
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%.0f\" y=\"%.0f\" width=\"%.0f\" height=\"%.0f\" fill=\"none\" stroke=\"#888\"/>\n",
                kPad, kPad, kW - 2 * kPad, kH - 2 * kPad);
  svg << buf;
  svg << "<text x=\"" << kPad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

  auto marker = [&](int cls, double x, double y) {
    if (cls == 0) {
      std::snprintf(buf, sizeof buf, "<circle class=\"genuine\" cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"#1f77b4\"/>\n", x, y);
    } else if (cls == 1) {
      std::snprintf(buf, sizeof buf,
                    "<rect class=\"skilled\" x=\"%.2f\" y=\"%.2f\" width=\"7\" height=\"7\" fill=\"#d62728\"/>\n", x - 3.5,
                    y - 3.5);
    } else {
      std::snprintf(buf, sizeof buf,
                    "<path class=\"random\" d=\"M %.2f %.2f L %.2f %.2f L %.2f %.2f Z\" fill=\"#2ca02c\"/>\n", x,
                    y - 4.5, x - 4.5, y + 4, x + 4.5, y + 4);
    }
    svg << buf;
  };
  const Matrix* classes[] = {&p.genuine, &p.skilled, &p.random};
  for (int c = 0; c < 3; ++c) {
    for (Eigen::Index i = 0; i < classes[c]->rows(); ++i) marker(c, sx((*classes[c])(i, 0)), sy((*classes[c])(i, 1)));
  }

  const char* names[] = {"genuine", "skilled forgery", "random forgery"};
  for (int c = 0; c < 3; ++c) {
    const double y = kPad + 20 + 24 * c;
    svg << "<g class=\"legend\">\n";
    marker(c, kW + 10, y);
    std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\">%s</text>\n",
                  kW + 22, y + 4, names[c]);
    svg << buf << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

LatentPlot latent_plot(const WriterSplit& split, const RunConfig& cfg, bool with_fd) {
  if (cfg.train.latent_dim != 2) {
    throw UsageError("latent-plot needs model.latent_dim = 2 (the scatter plot shows the raw 2-D feature space), got " +
                     std::to_string(cfg.train.latent_dim));
  }
  if (split.genuine_test.empty() || split.skilled_test.empty()) {
    throw DataError("writer " + split.writer_id + ": latent-plot needs held-out genuine and skilled samples");
  }
  TrainConfig tcfg = cfg.train_for(split.writer_id);
  if (!with_fd) tcfg.eta2 = 0.0;
  const TrainedWriter trained = train_writer(split, tcfg, cfg.svm);

  Rng rng(mix64(cfg.seed ^ fnv1a("latent-plot")));
  auto features = [&](const std::vector<SampleImage>& pool) {
    Matrix out(static_cast<Eigen::Index>(pool.size()), trained.vae.config.latent_dim);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      out.row(static_cast<Eigen::Index>(i)) = extract_features(trained.vae, pool[i].image.values, rng).transpose();
    }
    return out;
  };
  LatentPlot plot;
  plot.points.genuine = features(split.genuine_test);
  plot.points.skilled = features(split.skilled_test);
  plot.points.random = features(split.random_test.empty() ? split.random_forgeries : split.random_test);
  plot.separation = separation_score(plot.points);
  char title[160];
  std::snprintf(title, sizeof title, "writer %s, %s, separation %.4f", split.writer_id.c_str(),
                with_fd ? "with feature disentangling" : "without feature disentangling", plot.separation);
  plot.svg = latent_svg(plot.points, title);
  return plot;
}

}  // namespace fdv
