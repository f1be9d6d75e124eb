#pragma once

#include "lffpe/tensor.hpp"

namespace lffpe {

/// c = a * b for 2-D operands. Each output entry is accumulated over k in
/// ascending order, so results are reproducible bit for bit.
Tensor matmul(const Tensor &a, const Tensor &b);
/// a^T * b without materializing the transpose.
Tensor matmul_tn(const Tensor &a, const Tensor &b);
/// a * b^T without materializing the transpose.
Tensor matmul_nt(const Tensor &a, const Tensor &b);
Tensor transpose(const Tensor &a);

/// Adds `bias` (length = last axis) to every row.
Tensor add_bias(const Tensor &x, const Tensor &bias);
/// Sums the rows of a tensor viewed as [rows, cols].
Tensor column_sums(const Tensor &x);

double gelu(double x);
/// d gelu / dx = Phi(x) + x phi(x).
double gelu_derivative(double x);
Tensor gelu(const Tensor &x);

/// Per-row statistics kept by the forward pass for the backward pass.
struct LayerNormCache {
  Tensor normalized; // (x - mean) / sqrt(var + eps)
  std::vector<double> inv_std;
};

/// Normalizes the last axis with the population (1/d) variance, then
/// applies gain and bias.
Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias, double eps,
                  LayerNormCache *cache = nullptr);

struct LayerNormGrads {
  Tensor input;
  Tensor gain;
  Tensor bias;
};

LayerNormGrads layer_norm_backward(const Tensor &upstream, const Tensor &gain,
                                   const LayerNormCache &cache);

/// Softmax over the last axis with max subtraction.
Tensor softmax(const Tensor &x);

} // namespace lffpe
