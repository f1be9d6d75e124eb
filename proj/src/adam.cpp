#include "lffpe/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lffpe {

void adam_step(std::span<const ParamRef> params, AdamState &state) {
  if (state.first.empty()) {
    for (const auto &p : params) {
      state.first.emplace_back(p.value->shape());
      state.second.emplace_back(p.value->shape());
    }
  }
  if (state.first.size() != params.size())
    throw ShapeError("adam_step: parameter list changed size between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto &p = params[i];
    if (p.grad->shape() != p.value->shape() || state.first[i].shape() != p.value->shape())
      throw ShapeError("adam_step: shape mismatch for '" + std::string(p.name) + "'");
  }

  const auto &h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor &value = *params[i].value;
    const Tensor &grad = *params[i].grad;
    Tensor &m = state.first[i];
    Tensor &v = state.second[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * grad[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * grad[k] * grad[k];
      value[k] -= h.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + h.eps);
    }
  }
}

std::vector<ParamRef> trainable_refs(FourierPEParams &params, const GradientStore &grads,
                                     const FourierPEConfig &config) {
  std::vector<ParamRef> refs;
  for (const auto &slot : kParamSlots)
    if (is_trainable(slot, config))
      refs.push_back({slot.name, &(params.*slot.member), &(grads.*slot.member)});
  return refs;
}

void adam_step(FourierPEParams &params, const GradientStore &grads, const FourierPEConfig &config,
               AdamState &state) {
  const auto refs = trainable_refs(params, grads, config);
  adam_step(refs, state);
}

} // namespace lffpe
