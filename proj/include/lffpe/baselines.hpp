#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lffpe/rng.hpp"
#include "lffpe/tensor.hpp"

namespace lffpe {

inline constexpr double kSineBase = 10000.0;

/// Transformer sinusoid of a scalar position:
/// pe[2d] = sin(p / base^(2d/D)), pe[2d+1] = cos(p / base^(2d/D)).
Tensor sine_1d(double p, std::size_t dim, double base = kSineBase);

/// Each coordinate encoded by sine_1d into dim/M values, blocks
/// concatenated in coordinate order. Coordinates are multiplied by
/// `scale` first.
Tensor sine_concat_md(std::span<const double> x, std::size_t dim, double base = kSineBase,
                      double scale = 1.0);

/// Two-coordinate sinusoid that mixes the coordinates inside one phase:
/// sin(x / b0^(2d/D) + y / b1^(2d/D)) and the matching cos.
Tensor md_sine(std::span<const double> x, std::size_t dim,
               std::span<const double> bases = std::span<const double>{});

/// One trainable [vocab_i, width_i] matrix per embedded dimension.
struct EmbedTable {
  std::vector<Tensor> tables;

  static EmbedTable init(std::span<const std::size_t> vocab, std::span<const std::size_t> widths,
                         SeededRng &rng, double stddev = 0.02);
  [[nodiscard]] std::size_t width() const;

  friend bool operator==(const EmbedTable &, const EmbedTable &) = default;
};

enum class OutOfRange { Error, Clamp };

/// Thrown when an embedding index has no row, i.e. the position was never
/// part of the table's vocabulary.
class UnseenPositionError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

/// Concatenation of row indices[i] of table i.
Tensor embed_lookup(std::span<const std::int64_t> indices, const EmbedTable &table,
                    OutOfRange policy = OutOfRange::Error);

/// Resolves the index each table row lookup uses, honoring the policy.
std::size_t resolve_index(std::int64_t index, std::size_t vocab, OutOfRange policy);

enum class CombineMode { Add, Concat };

/// Content (+) position: element-wise sum, or [content || pe] per row.
Tensor combine(const Tensor &content, const Tensor &pe, CombineMode mode);

} // namespace lffpe
