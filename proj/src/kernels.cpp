#include "lffpe/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lffpe {

double gaussian_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size())
    throw ShapeError("gaussian_kernel: coordinate vectors differ in length");
  if (!(gamma > 0.0))
    throw std::invalid_argument("gaussian_kernel: gamma must be positive");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    d2 += (x[i] - y[i]) * (x[i] - y[i]);
  return std::exp(-d2 / (gamma * gamma));
}

double shift_fn(std::span<const double> delta, const Tensor &w_r) {
  if (w_r.rank() != 2 || w_r.dim(1) != delta.size())
    throw ShapeError("shift_fn: delta length " + std::to_string(delta.size()) +
                     " does not match w_r " + shape_to_string(w_r.shape()));
  double acc = 0.0;
  for (std::size_t k = 0; k < w_r.dim(0); ++k)
    acc += std::cos(dot(delta, w_r.row(k)));
  return acc / static_cast<double>(2 * w_r.dim(0));
}

double expected_fourier_kernel(double distance, double gamma) {
  return 0.5 * std::exp(-distance * distance / (2.0 * gamma * gamma));
}

double HeatmapGrid::sample(double r, double c) const {
  if (r < 0.0 || c < 0.0 || r > static_cast<double>(height - 1) ||
      c > static_cast<double>(width - 1))
    throw std::out_of_range("heatmap sample outside the grid");
  const auto r0 = static_cast<std::size_t>(std::floor(r));
  const auto c0 = static_cast<std::size_t>(std::floor(c));
  const std::size_t r1 = std::min(r0 + 1, height - 1);
  const std::size_t c1 = std::min(c0 + 1, width - 1);
  const double fr = r - static_cast<double>(r0), fc = c - static_cast<double>(c0);
  return (1 - fr) * (1 - fc) * at(r0, c0) + (1 - fr) * fc * at(r0, c1) +
         fr * (1 - fc) * at(r1, c0) + fr * fc * at(r1, c1);
}

std::string_view to_string(Stage s) { return s == Stage::Fourier ? "fourier" : "full"; }

Stage parse_stage(std::string_view s) {
  if (s == "fourier")
    return Stage::Fourier;
  if (s == "full")
    return Stage::Full;
  throw std::invalid_argument("unknown stage '" + std::string(s) + "'");
}

HeatmapGrid similarity_heatmap(const EncoderSpec &spec, const EncoderParams &params,
                               std::size_t height, std::size_t width, GridCell anchor, Stage stage,
                               const GridOptions &options) {
  if (height == 0 || width == 0)
    throw std::invalid_argument("heatmap grid must be nonempty");
  if (anchor.row >= height || anchor.col >= width)
    throw std::out_of_range("anchor (" + std::to_string(anchor.row) + ", " +
                            std::to_string(anchor.col) + ") outside " + std::to_string(height) +
                            "x" + std::to_string(width) + " grid");

  auto row_at = [&](std::size_t i) {
    return options.normalize ? (static_cast<double>(i) + 0.5) / static_cast<double>(height)
                             : options.origin_row + static_cast<double>(i);
  };
  auto col_at = [&](std::size_t j) {
    return options.normalize ? (static_cast<double>(j) + 0.5) / static_cast<double>(width)
                             : options.origin_col + static_cast<double>(j);
  };
  HeatmapGrid h{height, width, anchor, Tensor({height, width})};

  if (stage == Stage::Fourier) {
    const auto *f = std::get_if<FourierMlp>(&spec);
    const auto *p = std::get_if<FourierPEParams>(&params);
    if (!f || !p || f->config.features != FeatureMap::Fourier)
      throw std::invalid_argument("the fourier stage needs a Fourier-feature encoder");
    if (f->config.coords_per_group != 2)
      throw std::invalid_argument("the fourier stage needs M = 2 for a 2-D grid");
    // dot(r_anchor, r_cell) = (1/|F|) sum_k cos(w_k0 dr + w_k1 dc) (Eq. 3).
    // On a lattice the phase splits into a row part and a column part, so
    // the angle-addition formula needs trig only per row and per column.
    const Tensor &w = p->w_r;
    const std::size_t half = w.dim(0);
    std::vector<double> cr(height), sr(height), cc(width), sc(width);
    const double ar = row_at(anchor.row), ac = col_at(anchor.col);
    for (std::size_t k = 0; k < half; ++k) {
      for (std::size_t i = 0; i < height; ++i) {
        const double u = w.at(k, 0) * (row_at(i) - ar);
        cr[i] = std::cos(u);
        sr[i] = std::sin(u);
      }
      for (std::size_t j = 0; j < width; ++j) {
        const double u = w.at(k, 1) * (col_at(j) - ac);
        cc[j] = std::cos(u);
        sc[j] = std::sin(u);
      }
      for (std::size_t i = 0; i < height; ++i) {
        auto out = h.values.row(i);
        for (std::size_t j = 0; j < width; ++j)
          out[j] += cr[i] * cc[j] - sr[i] * sc[j];
      }
    }
    const double scale = 1.0 / static_cast<double>(2 * half);
    for (auto &v : h.values.data())
      v *= scale;
    return h;
  }

  if (input_width(spec) != 2)
    throw std::invalid_argument("the full stage needs an encoder taking 2 coordinates");
  Tensor coords({height * width, 1, 2});
  for (std::size_t i = 0; i < height; ++i)
    for (std::size_t j = 0; j < width; ++j) {
      coords.at(i * width + j, 0, 0) = row_at(i);
      coords.at(i * width + j, 0, 1) = col_at(j);
    }
  const Tensor reps = encode_positions(spec, params, PositionBatch(std::move(coords)));
  const auto ref = reps.row(anchor.row * width + anchor.col);
  for (std::size_t cell = 0; cell < height * width; ++cell)
    h.values[cell] = dot(ref, reps.row(cell));
  return h;
}

double anisotropy_ratio(const HeatmapGrid &h, double radius) {
  if (!(radius > 0.0))
    throw std::invalid_argument("anisotropy_ratio: radius must be positive");
  const double ar = static_cast<double>(h.anchor.row), ac = static_cast<double>(h.anchor.col);
  if (ar - radius < 0.0 || ac - radius < 0.0 || ar + radius > static_cast<double>(h.height - 1) ||
      ac + radius > static_cast<double>(h.width - 1))
    throw std::out_of_range("anisotropy_ratio: radius " + std::to_string(radius) +
                            " does not fit around the anchor");
  const double d = radius / std::numbers::sqrt2;
  const double axis = (h.sample(ar + radius, ac) + h.sample(ar - radius, ac) +
                       h.sample(ar, ac + radius) + h.sample(ar, ac - radius)) /
                      4.0;
  const double diag = (h.sample(ar + d, ac + d) + h.sample(ar + d, ac - d) +
                       h.sample(ar - d, ac + d) + h.sample(ar - d, ac - d)) /
                      4.0;
  if (diag == 0.0 || !std::isfinite(axis / diag))
    throw std::domain_error("anisotropy_ratio: diagonal similarity is zero");
  return axis / diag;
}

std::array<NamedAnchor, 5> default_anchors(std::size_t height, std::size_t width) {
  auto at = [](double frac, std::size_t extent) {
    return static_cast<std::size_t>(std::lround(frac * static_cast<double>(extent - 1)));
  };
  const double lo = 4.0 / 63.0, mid = 31.0 / 63.0, hi = 57.0 / 63.0;
  return {{
      {"top-left", {at(lo, height), at(lo, width)}},
      {"top-right", {at(lo, height), at(hi, width)}},
      {"center", {at(mid, height), at(mid, width)}},
      {"bottom-left", {at(hi, height), at(lo, width)}},
      {"bottom-right", {at(hi, height), at(hi, width)}},
  }};
}

HeatmapGrid average(std::span<const HeatmapGrid> maps) {
  if (maps.empty())
    throw std::invalid_argument("average of zero heatmaps");
  HeatmapGrid out = maps.front();
  for (std::size_t k = 1; k < maps.size(); ++k) {
    if (maps[k].values.shape() != out.values.shape())
      throw ShapeError("heatmaps differ in size");
    for (std::size_t i = 0; i < out.values.size(); ++i)
      out.values[i] += maps[k].values[i];
  }
  for (auto &v : out.values.data())
    v /= static_cast<double>(maps.size());
  return out;
}

} // namespace lffpe
