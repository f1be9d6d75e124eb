#include "lffpe/attention.hpp"

#include <cmath>

#include "lffpe/ops.hpp"

namespace lffpe {

AttentionParams AttentionParams::init(std::size_t embed_dim, std::size_t key_dim,
                                      std::size_t value_dim, SeededRng &rng) {
  const NormalDist dist{0.0, 1.0 / std::sqrt(static_cast<double>(embed_dim))};
  return {sample(rng, dist, {embed_dim, key_dim}), sample(rng, dist, {embed_dim, key_dim}),
          sample(rng, dist, {embed_dim, value_dim})};
}

Projections qkv_project(const Tensor &embeddings, const AttentionParams &params) {
  return {matmul(embeddings, params.query), matmul(embeddings, params.key),
          matmul(embeddings, params.value)};
}

Tensor attention(const Tensor &q, const Tensor &k, const Tensor &v, Tensor *weights) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2)
    throw ShapeError("attention expects 2-D Q, K, V");
  if (q.dim(1) != k.dim(1))
    throw ShapeError("attention: query width " + std::to_string(q.dim(1)) +
                     " != key width " + std::to_string(k.dim(1)));
  if (k.dim(0) != v.dim(0))
    throw ShapeError("attention: " + std::to_string(k.dim(0)) + " keys but " +
                     std::to_string(v.dim(0)) + " values");
  const double scale = 1.0 / std::sqrt(static_cast<double>(k.dim(1)));
  Tensor scores = matmul_nt(q, k);
  for (auto &s : scores.data())
    s *= scale;
  Tensor w = softmax(scores);
  Tensor out = matmul(w, v);
  if (weights)
    *weights = std::move(w);
  return out;
}

AttentionGrads attention_backward(const Tensor &q, const Tensor &k, const Tensor &v,
                                  const Tensor &weights, const Tensor &upstream) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(k.dim(1)));
  AttentionGrads g;
  g.v = matmul_tn(weights, upstream);
  const Tensor d_weights = matmul_nt(upstream, v);
  Tensor d_scores(weights.shape());
  for (std::size_t r = 0; r < weights.rows(); ++r) {
    const auto w = weights.row(r);
    const auto dw = d_weights.row(r);
    const double inner = dot(w, dw);
    auto ds = d_scores.row(r);
    for (std::size_t j = 0; j < w.size(); ++j)
      ds[j] = scale * w[j] * (dw[j] - inner);
  }
  g.q = matmul(d_scores, k);
  g.k = matmul_tn(d_scores, q);
  return g;
}

} // namespace lffpe
