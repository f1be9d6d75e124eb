#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "lffpe/ops.hpp"
#include "lffpe/rng.hpp"
#include "lffpe/tensor.hpp"

namespace lffpe {

/**
 * N positions, each split into G groups of M coordinates: a [N, G, M]
 * tensor. Groups are encoded independently with shared weights.
 */
class PositionBatch {
public:
  explicit PositionBatch(Tensor values);
  /// Views each row of a [N, G*M] matrix as G groups of M coordinates.
  static PositionBatch from_rows(const Tensor &rows, std::size_t groups, std::size_t coords);

  [[nodiscard]] std::size_t count() const { return values_.dim(0); }
  [[nodiscard]] std::size_t groups() const { return values_.dim(1); }
  [[nodiscard]] std::size_t coords() const { return values_.dim(2); }
  [[nodiscard]] std::size_t width() const { return groups() * coords(); }

  [[nodiscard]] const Tensor &values() const { return values_; }
  /// All G*M coordinates of position n.
  [[nodiscard]] std::span<const double> position(std::size_t n) const;
  /// The [N*G, M] matrix with one group per row.
  [[nodiscard]] Tensor group_rows() const;

  /// Maps coordinate v with extent E to (v + 0.5) / E, i.e. into (0, 1).
  /// `extents` holds one entry per coordinate of a group (M) or per
  /// coordinate of a position (G*M).
  [[nodiscard]] PositionBatch normalized(std::span<const double> extents) const;

  /// Row subset, in the given order.
  [[nodiscard]] PositionBatch select(std::span<const std::size_t> rows) const;

private:
  Tensor values_;
};

enum class InitKind { Normal, Uniform };

/// What feeds the MLP: Fourier features of each group, the raw
/// coordinates (MLP-only baseline), or the fixed sinusoid of each
/// coordinate (sine + MLP baseline).
enum class FeatureMap { Fourier, Raw, Sine };

enum class Mode { Train, Eval };

std::string_view to_string(InitKind k);
std::string_view to_string(FeatureMap f);
InitKind parse_init_kind(std::string_view s);
FeatureMap parse_feature_map(std::string_view s);

struct FourierPEConfig {
  std::size_t fourier_dim = 0;  // |F|, even
  std::size_t hidden_dim = 0;   // |H|
  std::size_t encoding_dim = 0; // D, divisible by groups
  std::size_t groups = 1;       // G
  std::size_t coords_per_group = 0; // M
  double gamma = 1.0;
  InitKind init = InitKind::Normal;
  double init_lo = 0.0;
  double init_hi = 1.0;
  bool layer_norm = false;
  double dropout = 0.0;
  bool trainable_fourier = true;
  FeatureMap features = FeatureMap::Fourier;
  double layer_norm_eps = 1e-6;

  /// Throws std::invalid_argument describing the first violated rule.
  void validate() const;

  [[nodiscard]] std::size_t group_dim() const { return encoding_dim / groups; }
  /// Width of the per-group vector entering the MLP.
  [[nodiscard]] std::size_t feature_width() const;

  friend bool operator==(const FourierPEConfig &, const FourierPEConfig &) = default;
};

struct FourierPEParams {
  Tensor w_r; // [|F|/2, M]; empty unless features == Fourier
  Tensor w1;  // [feature_width, |H|]
  Tensor b1;  // [|H|]
  Tensor w2;  // [|H|, D/G]
  Tensor b2;  // [D/G]
  Tensor ln1_gain, ln1_bias; // [feature_width], only with layer_norm
  Tensor ln2_gain, ln2_bias; // [|H|], only with layer_norm

  friend bool operator==(const FourierPEParams &, const FourierPEParams &) = default;
};

/// Named access to every tensor slot of FourierPEParams, in a fixed order.
struct ParamSlot {
  std::string_view name;
  Tensor FourierPEParams::*member;
};
inline constexpr std::array<ParamSlot, 9> kParamSlots{{
    {"w_r", &FourierPEParams::w_r},
    {"w1", &FourierPEParams::w1},
    {"b1", &FourierPEParams::b1},
    {"w2", &FourierPEParams::w2},
    {"b2", &FourierPEParams::b2},
    {"ln1_gain", &FourierPEParams::ln1_gain},
    {"ln1_bias", &FourierPEParams::ln1_bias},
    {"ln2_gain", &FourierPEParams::ln2_gain},
    {"ln2_bias", &FourierPEParams::ln2_bias},
}};

/// Throws ShapeError unless every tensor has the shape `config` implies.
void check_params(const FourierPEParams &params, const FourierPEConfig &config);

/**
 * W_r from the configured distribution (Normal(0, gamma^-2) by default),
 * W_1 and W_2 fan-in scaled normal, biases zero, LayerNorm gains one.
 */
FourierPEParams init_params(const FourierPEConfig &config, SeededRng &rng);

/// (1/sqrt|F|) [cos(x W_r^T) || sin(x W_r^T)] for every group: [N, G, |F|].
Tensor fourier_features(const PositionBatch &x, const Tensor &w_r);

/// Intermediate values of one forward pass, enough to run it backwards.
struct EncodeCache {
  Tensor group_inputs;  // [N*G, M]
  Tensor phases;        // [N*G, |F|/2], x W_r^T (Fourier features only)
  Tensor features;      // [N*G, feature_width]
  LayerNormCache ln1;
  Tensor mlp_input;     // features after optional LayerNorm
  Tensor pre_activation; // [N*G, |H|]
  Tensor dropout_scale; // [N*G, |H|] multipliers, empty when no dropout
  LayerNormCache ln2;
  Tensor projection_input; // [N*G, |H|]
};

/// Per-group features entering the MLP: [N, G, feature_width].
Tensor feature_map(const PositionBatch &x, const FourierPEParams &params,
                   const FourierPEConfig &config);

/**
 * Y = GeLU(F W_1 + B_1) W_2 + B_2, with optional LayerNorm before each
 * projection and dropout after the GeLU in training mode. Returns
 * [N, G, D/G]. `rng` is required only when dropout is active.
 */
Tensor mlp_modulate(const Tensor &features, const FourierPEParams &params,
                    const FourierPEConfig &config, Mode mode = Mode::Eval,
                    SeededRng *rng = nullptr, EncodeCache *cache = nullptr);

/// Features, MLP, then the [N, G, D/G] -> [N, D] reshape (groups in order).
Tensor encode(const PositionBatch &x, const FourierPEParams &params,
              const FourierPEConfig &config, Mode mode = Mode::Eval, SeededRng *rng = nullptr,
              EncodeCache *cache = nullptr);

} // namespace lffpe
