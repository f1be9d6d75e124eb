#pragma once

#include <functional>

#include "lffpe/fourier_encoder.hpp"

namespace lffpe {

/**
 * One gradient tensor per parameter of FourierPEParams, same shapes.
 * w_r stays empty when the Fourier weights are frozen; LayerNorm slots
 * stay empty when LayerNorm is off.
 */
struct GradientStore : FourierPEParams {
  static GradientStore zeros_like(const FourierPEParams &params, const FourierPEConfig &config);
  void zero();
  GradientStore &operator+=(const GradientStore &other);
};

/// True for the slots that receive gradient under `config`.
bool is_trainable(const ParamSlot &slot, const FourierPEConfig &config);

/**
 * Exact gradient of <upstream, encode(x)> with respect to every trainable
 * parameter. Without a cache the forward pass is recomputed in eval mode;
 * with one (filled by encode in either mode) its dropout mask is reused.
 */
GradientStore backward_encode(const PositionBatch &x, const FourierPEParams &params,
                              const FourierPEConfig &config, const Tensor &upstream,
                              const EncodeCache *cache = nullptr);

/// Chain rule through (1/sqrt|F|)[cos u || sin u], u = x W_r^T:
/// returns dL/dW_r given dL/dfeatures for [rows, |F|] features.
Tensor fourier_features_backward(const Tensor &group_inputs, const Tensor &phases,
                                 const Tensor &d_features);

using ParamLoss = std::function<double(const FourierPEParams &)>;

/// Central differences (L(p + h) - L(p - h)) / 2h for every scalar of every
/// trainable slot. Throws std::domain_error on a non-finite loss.
GradientStore finite_diff_grad(const ParamLoss &loss, const FourierPEParams &params,
                               const FourierPEConfig &config, double step);

/// The same oracle for a loss over a single tensor.
Tensor finite_diff_grad(const std::function<double(const Tensor &)> &loss, const Tensor &point,
                        double step);

/// ||a - b|| / max(||a||, ||b||), Euclidean norms over all entries
/// (0 when both vanish).
double relative_error(const Tensor &a, const Tensor &b);

} // namespace lffpe
