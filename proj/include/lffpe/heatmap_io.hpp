#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lffpe/kernels.hpp"

namespace lffpe {

struct PgmScaling {
  double min = 0.0;
  double max = 0.0;
};

/// Height rows of width comma-separated values, no header.
void write_heatmap_csv(std::ostream &out, const HeatmapGrid &h);

/// Plain (P2) PGM, maxval 255, pixel = round(255 (v - min) / (max - min)).
/// A constant map is written as all zeros. Returns the scaling used.
PgmScaling write_pgm(std::ostream &out, const HeatmapGrid &h);

/// Sidecar text: min, max and the scaling rule, then any extra key=value
/// lines (e.g. the anisotropy ratio).
void write_pgm_meta(std::ostream &out, const PgmScaling &s,
                    const std::vector<std::pair<std::string, std::string>> &extra = {});

} // namespace lffpe
