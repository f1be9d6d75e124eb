#pragma once

#include "lffpe/rng.hpp"
#include "lffpe/tensor.hpp"

namespace lffpe {

/// Projections of a single attention head; E is the embedding width.
struct AttentionParams {
  Tensor query; // M_Q [E, d_k]
  Tensor key;   // M_K [E, d_k]
  Tensor value; // M_V [E, d_v]

  static AttentionParams init(std::size_t embed_dim, std::size_t key_dim, std::size_t value_dim,
                              SeededRng &rng);
};

struct Projections {
  Tensor q, k, v;
};

/// Q = E M_Q, K = E M_K, V = E M_V.
Projections qkv_project(const Tensor &embeddings, const AttentionParams &params);

/// softmax(Q K^T / sqrt(d_k)) V. Q may have a different row count than
/// K and V (cross attention); K and V must agree. When `weights` is given
/// it receives the [N_q, N_k] attention matrix.
Tensor attention(const Tensor &q, const Tensor &k, const Tensor &v, Tensor *weights = nullptr);

struct AttentionGrads {
  Tensor q, k, v;
};

/// Reverse pass of attention() given its weights and upstream gradient.
AttentionGrads attention_backward(const Tensor &q, const Tensor &k, const Tensor &v,
                                  const Tensor &weights, const Tensor &upstream);

} // namespace lffpe
