#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lffpe/baselines.hpp"
#include "lffpe/fourier_encoder.hpp"

namespace lffpe {

/// Zero positional encoding; the control arm of the toy experiments.
struct NoEncoding {
  std::size_t input_width = 2;
  std::size_t encoding_dim = 0;
  friend bool operator==(const NoEncoding &, const NoEncoding &) = default;
};

/// Features + MLP. Learnable-Fourier, Fixed-Fourier and MLP-only all live
/// here; which one is decided by `config.features` and
/// `config.trainable_fourier`.
struct FourierMlp {
  FourierPEConfig config;
  friend bool operator==(const FourierMlp &, const FourierMlp &) = default;
};

/// Sine-1D over a scalar position. With `flatten_extents`, a
/// multi-coordinate position becomes its row-major raster index first.
struct Sine1D {
  std::size_t input_width = 1;
  std::size_t encoding_dim = 0;
  double base = kSineBase;
  double scale = 1.0;
  std::vector<std::size_t> flatten_extents;
  friend bool operator==(const Sine1D &, const Sine1D &) = default;
};

/// Sine-2D / Sine-4D: each coordinate through Sine-1D, concatenated.
struct SineConcat {
  std::size_t input_width = 2;
  std::size_t encoding_dim = 0;
  double base = kSineBase;
  double scale = 1.0;
  friend bool operator==(const SineConcat &, const SineConcat &) = default;
};

struct MdSine {
  std::size_t encoding_dim = 0;
  std::array<double, 2> bases{10000.0, 5000.0};
  double scale = 1.0;
  friend bool operator==(const MdSine &, const MdSine &) = default;
};

/// Embed-ND: one lookup table per coordinate; Embed-1D when a single
/// table is paired with `flatten_extents`.
struct EmbedND {
  std::size_t input_width = 2;
  std::vector<std::size_t> vocab;
  std::vector<std::size_t> widths;
  std::vector<std::size_t> flatten_extents;
  OutOfRange out_of_range = OutOfRange::Error;
  friend bool operator==(const EmbedND &, const EmbedND &) = default;
};

using EncoderSpec = std::variant<NoEncoding, FourierMlp, Sine1D, SineConcat, MdSine, EmbedND>;

enum class EncoderKind {
  None,
  LearnableFourier,
  FixedFourier,
  MlpOnly,
  Sine1D,
  SineConcatMD,
  MDSine,
  EmbedND
};

EncoderKind kind_of(const EncoderSpec &spec);
std::string_view kind_name(EncoderKind kind);
EncoderKind parse_kind(std::string_view name);

/// Output width D.
std::size_t output_dim(const EncoderSpec &spec);
/// Coordinates per position the encoder consumes (G*M for FourierMlp).
std::size_t input_width(const EncoderSpec &spec);
/// Throws std::invalid_argument if the spec is internally inconsistent.
void validate(const EncoderSpec &spec);

using EncoderParams = std::variant<std::monostate, FourierPEParams, EmbedTable>;

EncoderParams init_encoder_params(const EncoderSpec &spec, SeededRng &rng);

/// Integer table indices for one position (after optional flattening).
std::vector<std::int64_t> embed_indices(const EmbedND &spec, std::span<const double> position);

/**
 * Encodes every position of `x` as a [N, D] matrix. The batch may use any
 * grouping whose total width matches the encoder; FourierMlp specs regroup
 * it into their own [N, G, M] layout.
 */
Tensor encode_positions(const EncoderSpec &spec, const EncoderParams &params,
                        const PositionBatch &x, Mode mode = Mode::Eval,
                        SeededRng *rng = nullptr);

/// Reshapes a batch to the [N, G, M] layout a FourierMlp config expects.
PositionBatch regroup(const PositionBatch &x, std::size_t groups, std::size_t coords);

/// Flat `key=value` text, one key per line, in a fixed order.
std::string serialize_spec(const EncoderSpec &spec);
/// Inverse of serialize_spec. Blank lines and `#` comments are ignored.
/// Unknown or missing keys are errors; only layer_norm, dropout,
/// layer_norm_eps, init bounds, base, scale, bases, flatten_extents and
/// out_of_range have defaults.
EncoderSpec parse_spec(std::string_view text);

} // namespace lffpe
