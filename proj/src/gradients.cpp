#include "lffpe/gradients.hpp"

#include <cmath>
#include <stdexcept>

namespace lffpe {

bool is_trainable(const ParamSlot &slot, const FourierPEConfig &config) {
  if (slot.name == "w_r")
    return config.features == FeatureMap::Fourier && config.trainable_fourier;
  if (slot.name.starts_with("ln"))
    return config.layer_norm;
  return true;
}

GradientStore GradientStore::zeros_like(const FourierPEParams &params,
                                        const FourierPEConfig &config) {
  GradientStore g;
  for (const auto &slot : kParamSlots)
    if (is_trainable(slot, config))
      g.*slot.member = Tensor((params.*slot.member).shape());
  return g;
}

void GradientStore::zero() {
  for (const auto &slot : kParamSlots)
    for (auto &v : (this->*slot.member).data())
      v = 0.0;
}

GradientStore &GradientStore::operator+=(const GradientStore &other) {
  for (const auto &slot : kParamSlots) {
    Tensor &mine = this->*slot.member;
    const Tensor &theirs = other.*slot.member;
    if (theirs.empty())
      continue;
    if (mine.empty())
      mine = theirs;
    else
      mine = mine + theirs;
  }
  return *this;
}

Tensor fourier_features_backward(const Tensor &group_inputs, const Tensor &phases,
                                 const Tensor &d_features) {
  const std::size_t rows = phases.dim(0), half = phases.dim(1);
  if (d_features.shape() != Shape{rows, 2 * half} || group_inputs.dim(0) != rows)
    throw ShapeError("fourier_features_backward: inconsistent shapes");
  const double scale = 1.0 / std::sqrt(static_cast<double>(2 * half));
  Tensor d_phases({rows, half});
  for (std::size_t r = 0; r < rows; ++r) {
    const auto u = phases.row(r);
    const auto df = d_features.row(r);
    auto du = d_phases.row(r);
    for (std::size_t k = 0; k < half; ++k)
      du[k] = scale * (-std::sin(u[k]) * df[k] + std::cos(u[k]) * df[half + k]);
  }
  return matmul_tn(d_phases, group_inputs);
}

GradientStore backward_encode(const PositionBatch &x, const FourierPEParams &params,
                              const FourierPEConfig &config, const Tensor &upstream,
                              const EncodeCache *cache) {
  if (upstream.shape() != Shape{x.count(), config.encoding_dim})
    throw ShapeError("backward_encode: upstream " + shape_to_string(upstream.shape()) +
                     " does not match [" + std::to_string(x.count()) + ", " +
                     std::to_string(config.encoding_dim) + "]");
  EncodeCache local;
  if (!cache) {
    encode(x, params, config, Mode::Eval, nullptr, &local);
    cache = &local;
  }
  if (cache->pre_activation.dim(0) != x.count() * x.groups())
    throw ShapeError("backward_encode: cache does not belong to this batch");

  GradientStore g = GradientStore::zeros_like(params, config);
  const Tensor dy = upstream.reshaped({x.count() * x.groups(), config.group_dim()});

  g.b2 = column_sums(dy);
  g.w2 = matmul_tn(cache->projection_input, dy);
  Tensor d_act = matmul_nt(dy, params.w2);
  if (config.layer_norm) {
    auto ln = layer_norm_backward(d_act, params.ln2_gain, cache->ln2);
    g.ln2_gain = std::move(ln.gain);
    g.ln2_bias = std::move(ln.bias);
    d_act = std::move(ln.input);
  }
  if (!cache->dropout_scale.empty())
    for (std::size_t i = 0; i < d_act.size(); ++i)
      d_act[i] *= cache->dropout_scale[i];

  Tensor d_pre = d_act;
  for (std::size_t i = 0; i < d_pre.size(); ++i)
    d_pre[i] *= gelu_derivative(cache->pre_activation[i]);
  g.b1 = column_sums(d_pre);
  g.w1 = matmul_tn(cache->mlp_input, d_pre);

  const bool need_features = config.layer_norm || is_trainable(kParamSlots[0], config);
  if (!need_features)
    return g;
  Tensor d_features = matmul_nt(d_pre, params.w1);
  if (config.layer_norm) {
    auto ln = layer_norm_backward(d_features, params.ln1_gain, cache->ln1);
    g.ln1_gain = std::move(ln.gain);
    g.ln1_bias = std::move(ln.bias);
    d_features = std::move(ln.input);
  }
  if (is_trainable(kParamSlots[0], config))
    g.w_r = fourier_features_backward(cache->group_inputs, cache->phases, d_features);
  return g;
}

GradientStore finite_diff_grad(const ParamLoss &loss, const FourierPEParams &params,
                               const FourierPEConfig &config, double step) {
  if (!(step > 0.0))
    throw std::invalid_argument("finite_diff_grad: step must be positive");
  GradientStore g = GradientStore::zeros_like(params, config);
  FourierPEParams probe = params;
  for (const auto &slot : kParamSlots) {
    if (!is_trainable(slot, config))
      continue;
    Tensor &target = probe.*slot.member;
    Tensor &out = g.*slot.member;
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double saved = target[i];
      target[i] = saved + step;
      const double up = loss(probe);
      target[i] = saved - step;
      const double down = loss(probe);
      target[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::domain_error("finite_diff_grad: loss is not finite near " +
                                std::string(slot.name));
      out[i] = (up - down) / (2.0 * step);
    }
  }
  return g;
}

Tensor finite_diff_grad(const std::function<double(const Tensor &)> &loss, const Tensor &point,
                        double step) {
  if (!(step > 0.0))
    throw std::invalid_argument("finite_diff_grad: step must be positive");
  Tensor probe = point;
  Tensor g(point.shape());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + step;
    const double up = loss(probe);
    probe[i] = saved - step;
    const double down = loss(probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw std::domain_error("finite_diff_grad: loss is not finite");
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double relative_error(const Tensor &a, const Tensor &b) {
  if (a.shape() != b.shape())
    throw ShapeError("relative_error: shapes differ");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

} // namespace lffpe
