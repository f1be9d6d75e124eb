#include "lffpe/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lffpe {

namespace {

double inverse_wavelength(std::size_t pair, std::size_t dim, double base) {
  return 1.0 / std::pow(base, static_cast<double>(2 * pair) / static_cast<double>(dim));
}

} // namespace

Tensor sine_1d(double p, std::size_t dim, double base) {
  if (dim == 0 || dim % 2 != 0)
    throw std::invalid_argument("sine_1d needs a positive even dimension, got " +
                                std::to_string(dim));
  Tensor out({dim});
  for (std::size_t d = 0; d < dim / 2; ++d) {
    const double phase = p * inverse_wavelength(d, dim, base);
    out[2 * d] = std::sin(phase);
    out[2 * d + 1] = std::cos(phase);
  }
  return out;
}

Tensor sine_concat_md(std::span<const double> x, std::size_t dim, double base, double scale) {
  const std::size_t m = x.size();
  if (m == 0)
    throw std::invalid_argument("sine_concat_md needs at least one coordinate");
  if (dim % m != 0 || (dim / m) % 2 != 0 || dim == 0)
    throw std::invalid_argument("sine_concat_md: dimension " + std::to_string(dim) +
                                " must split into " + std::to_string(m) + " even blocks");
  const std::size_t block = dim / m;
  Tensor out({dim});
  for (std::size_t c = 0; c < m; ++c) {
    const Tensor part = sine_1d(scale * x[c], block, base);
    std::copy(part.data().begin(), part.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(c * block));
  }
  return out;
}

Tensor md_sine(std::span<const double> x, std::size_t dim, std::span<const double> bases) {
  static constexpr double kDefaultBases[2] = {10000.0, 5000.0};
  if (x.size() != 2)
    throw std::invalid_argument("md_sine is defined for 2 coordinates, got " +
                                std::to_string(x.size()));
  if (bases.empty())
    bases = kDefaultBases;
  if (bases.size() != 2)
    throw std::invalid_argument("md_sine needs one base per coordinate");
  if (dim == 0 || dim % 2 != 0)
    throw std::invalid_argument("md_sine needs a positive even dimension");
  Tensor out({dim});
  for (std::size_t d = 0; d < dim / 2; ++d) {
    const double phase =
        x[0] * inverse_wavelength(d, dim, bases[0]) + x[1] * inverse_wavelength(d, dim, bases[1]);
    out[2 * d] = std::sin(phase);
    out[2 * d + 1] = std::cos(phase);
  }
  return out;
}

EmbedTable EmbedTable::init(std::span<const std::size_t> vocab,
                            std::span<const std::size_t> widths, SeededRng &rng, double stddev) {
  if (vocab.empty() || vocab.size() != widths.size())
    throw std::invalid_argument("embed table needs matching, nonempty vocab and width lists");
  EmbedTable t;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i] == 0 || widths[i] == 0)
      throw std::invalid_argument("embed vocab and width entries must be positive");
    t.tables.push_back(sample(rng, NormalDist{0.0, stddev}, {vocab[i], widths[i]}));
  }
  return t;
}

std::size_t EmbedTable::width() const {
  std::size_t w = 0;
  for (const auto &t : tables)
    w += t.dim(1);
  return w;
}

std::size_t resolve_index(std::int64_t index, std::size_t vocab, OutOfRange policy) {
  const auto hi = static_cast<std::int64_t>(vocab) - 1;
  if (index >= 0 && index <= hi)
    return static_cast<std::size_t>(index);
  if (policy == OutOfRange::Clamp)
    return static_cast<std::size_t>(index < 0 ? 0 : hi);
  throw UnseenPositionError("embedding index " + std::to_string(index) +
                            " outside vocabulary [0, " + std::to_string(vocab) + ")");
}

Tensor embed_lookup(std::span<const std::int64_t> indices, const EmbedTable &table,
                    OutOfRange policy) {
  if (indices.size() != table.tables.size())
    throw ShapeError("embed_lookup: " + std::to_string(indices.size()) + " indices for " +
                     std::to_string(table.tables.size()) + " tables");
  Tensor out({table.width()});
  auto it = out.data().begin();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Tensor &t = table.tables[i];
    const auto row = t.row(resolve_index(indices[i], t.dim(0), policy));
    it = std::copy(row.begin(), row.end(), it);
  }
  return out;
}

Tensor combine(const Tensor &content, const Tensor &pe, CombineMode mode) {
  if (content.rank() != 2 || pe.rank() != 2 || content.dim(0) != pe.dim(0))
    throw ShapeError("combine: content " + shape_to_string(content.shape()) + " and pe " +
                     shape_to_string(pe.shape()) + " must be [N, C] and [N, D]");
  if (mode == CombineMode::Add) {
    if (content.dim(1) != pe.dim(1))
      throw ShapeError("combine(add): content width " + std::to_string(content.dim(1)) +
                       " != pe width " + std::to_string(pe.dim(1)));
    return content + pe;
  }
  const std::size_t c = content.dim(1), d = pe.dim(1);
  Tensor out({content.dim(0), c + d});
  for (std::size_t r = 0; r < content.dim(0); ++r) {
    auto o = out.row(r);
    std::copy(content.row(r).begin(), content.row(r).end(), o.begin());
    std::copy(pe.row(r).begin(), pe.row(r).end(), o.begin() + static_cast<std::ptrdiff_t>(c));
  }
  return out;
}

} // namespace lffpe
