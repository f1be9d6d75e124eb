#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lffpe/gradients.hpp"

namespace lffpe {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moments for a fixed, ordered list of parameter tensors.
/// Moments are sized on the first step.
struct AdamState {
  AdamConfig hyper;
  std::uint64_t step = 0;
  std::vector<Tensor> first;
  std::vector<Tensor> second;
};

struct ParamRef {
  std::string_view name;
  Tensor *value;
  const Tensor *grad;
};

/// One bias-corrected Adam update of every referenced tensor. The list
/// must name the same tensors, in the same order, on every call.
void adam_step(std::span<const ParamRef> params, AdamState &state);

/// Updates the trainable slots of `params` from `grads`.
void adam_step(FourierPEParams &params, const GradientStore &grads, const FourierPEConfig &config,
               AdamState &state);

/// References to the trainable slots, paired with their gradients.
std::vector<ParamRef> trainable_refs(FourierPEParams &params, const GradientStore &grads,
                                     const FourierPEConfig &config);

} // namespace lffpe
