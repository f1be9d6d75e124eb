#include "lffpe/heatmap_io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "lffpe/serialization.hpp"

namespace lffpe {

void write_heatmap_csv(std::ostream &out, const HeatmapGrid &h) {
  for (std::size_t i = 0; i < h.height; ++i) {
    for (std::size_t j = 0; j < h.width; ++j)
      out << (j ? "," : "") << format_number(h.at(i, j));
    out << '\n';
  }
}

PgmScaling write_pgm(std::ostream &out, const HeatmapGrid &h) {
  const auto [lo, hi] = std::minmax_element(h.values.data().begin(), h.values.data().end());
  const PgmScaling s{*lo, *hi};
  const double range = s.max - s.min;
  out << "P2\n" << h.width << ' ' << h.height << "\n255\n";
  for (std::size_t i = 0; i < h.height; ++i) {
    for (std::size_t j = 0; j < h.width; ++j) {
      const long px = range > 0.0 ? std::lround(255.0 * (h.at(i, j) - s.min) / range) : 0;
      out << (j ? " " : "") << px;
    }
    out << '\n';
  }
  return s;
}

void write_pgm_meta(std::ostream &out, const PgmScaling &s,
                    const std::vector<std::pair<std::string, std::string>> &extra) {
  out << "min=" << format_number(s.min) << '\n'
      << "max=" << format_number(s.max) << '\n'
      << "scaling=pixel = round(255 * (value - min) / (max - min)); value = min + pixel * (max - "
         "min) / 255\n";
  for (const auto &[k, v] : extra)
    out << k << '=' << v << '\n';
}

} // namespace lffpe
