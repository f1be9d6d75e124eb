#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "lffpe/encoder_spec.hpp"

namespace lffpe {

/// exp(-|x - y|^2 / gamma^2).
double gaussian_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// h(delta) = (1/|F|) sum_k cos(delta . w_k), the closed form of
/// dot(r_x, r_y) for delta = x - y. Zero delta gives exactly 1/2.
double shift_fn(std::span<const double> delta, const Tensor &w_r);

/// Expected Fourier-feature dot product under W_r ~ Normal(0, gamma^-2):
/// (1/2) exp(-|delta|^2 / (2 gamma^2)).
double expected_fourier_kernel(double distance, double gamma);

struct GridCell {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const GridCell &, const GridCell &) = default;
};

struct HeatmapGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  GridCell anchor;
  Tensor values; // [height, width]

  [[nodiscard]] double at(std::size_t r, std::size_t c) const { return values.at(r, c); }
  /// Bilinear interpolation at fractional grid coordinates.
  [[nodiscard]] double sample(double r, double c) const;
};

/// Which representation is compared: the Fourier features r_x, or the
/// full encoder output PE_x.
enum class Stage { Fourier, Full };
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

struct GridOptions {
  /// Cell (i, j) sits at (origin_row + i, origin_col + j) ...
  double origin_row = 0.0;
  double origin_col = 0.0;
  /// ... or, when normalizing, at ((i + 0.5) / height, (j + 0.5) / width).
  bool normalize = false;
};

/**
 * values[i][j] = dot(repr(anchor), repr(cell(i, j))). The Fourier stage
 * needs a Fourier feature map with M = 2 and uses the shared W_r of the
 * groups; the full stage needs an encoder consuming 2 coordinates.
 * Raw dot products, no cosine normalization.
 */
HeatmapGrid similarity_heatmap(const EncoderSpec &spec, const EncoderParams &params,
                               std::size_t height, std::size_t width, GridCell anchor, Stage stage,
                               const GridOptions &options = {});

/// Mean similarity at the four axis offsets of `radius` divided by the
/// mean at the four diagonal offsets of equal Euclidean length (bilinear
/// interpolation off-lattice). 1 for an isotropic map.
double anisotropy_ratio(const HeatmapGrid &h, double radius);

struct NamedAnchor {
  std::string_view name;
  GridCell cell;
};

/// Top-left, top-right, center, bottom-left, bottom-right probes. On a
/// 64x64 grid these are (4,4), (4,57), (31,31), (57,4), (57,57); other
/// sizes scale the same fractions.
std::array<NamedAnchor, 5> default_anchors(std::size_t height, std::size_t width);

/// Element-wise mean of equally sized heatmaps.
HeatmapGrid average(std::span<const HeatmapGrid> maps);

} // namespace lffpe
