#include "lffpe/kernel_fit.hpp"

#include <cmath>

namespace lffpe {

DivergenceError::DivergenceError(std::size_t step, const std::string &what)
    : std::runtime_error("training diverged at step " + std::to_string(step) + ": " + what),
      step_(step) {}

PairSet sample_pairs(std::size_t count, std::size_t groups, std::size_t coords, double extent,
                     SeededRng &rng) {
  if (count == 0 || !(extent > 0.0))
    throw std::invalid_argument("sample_pairs needs a positive count and extent");
  const Shape shape{count, groups, coords};
  Tensor a = sample(rng, UniformDist{0.0, extent}, shape);
  Tensor b = sample(rng, UniformDist{0.0, extent}, shape);
  return {PositionBatch(std::move(a)), PositionBatch(std::move(b))};
}

namespace {

/// Both halves of the pair set stacked into one batch: rows [0, P) are the
/// first elements, rows [P, 2P) the second.
PositionBatch stack(const PairSet &pairs, const FourierPEConfig &config) {
  const auto &a = pairs.first.values();
  const auto &b = pairs.second.values();
  if (a.shape() != b.shape())
    throw ShapeError("pair halves differ in shape");
  std::vector<double> data(a.values());
  data.insert(data.end(), b.values().begin(), b.values().end());
  PositionBatch both(Tensor({2 * a.dim(0), a.dim(1), a.dim(2)}, std::move(data)));
  return regroup(both, config.groups, config.coords_per_group);
}

std::vector<double> targets_for(const PairSet &pairs, const TargetKernel &target) {
  std::vector<double> t(pairs.first.count());
  for (std::size_t p = 0; p < t.size(); ++p) {
    t[p] = target(pairs.first.position(p), pairs.second.position(p));
    if (!std::isfinite(t[p]))
      throw std::invalid_argument("target kernel returned a non-finite value");
  }
  return t;
}

struct Representation {
  Tensor values; // [2P, width]
  EncodeCache cache;
  Tensor phases; // fourier stage only
  Tensor group_inputs;
};

Representation represent(const PositionBatch &both, const FourierPEParams &params,
                         const FourierPEConfig &config, Stage stage, Mode mode, SeededRng *rng) {
  Representation r;
  if (stage == Stage::Full) {
    r.values = encode(both, params, config, mode, rng, &r.cache);
    return r;
  }
  r.group_inputs = both.group_rows();
  r.phases = matmul_nt(r.group_inputs, params.w_r);
  const Tensor ff = fourier_features(both, params.w_r);
  r.values = ff.reshaped({both.count(), both.groups() * ff.dim(2)});
  return r;
}

/// Mean squared error and its gradient with respect to the stacked reps.
double mse_and_grad(const Tensor &reps, std::span<const double> targets, Tensor *grad) {
  const std::size_t p_count = targets.size();
  double loss = 0.0;
  if (grad)
    *grad = Tensor(reps.shape());
  for (std::size_t p = 0; p < p_count; ++p) {
    const auto a = reps.row(p);
    const auto b = reps.row(p_count + p);
    const double err = dot(a, b) - targets[p];
    loss += err * err;
    if (grad) {
      const double coef = 2.0 * err / static_cast<double>(p_count);
      auto ga = grad->row(p);
      auto gb = grad->row(p_count + p);
      for (std::size_t j = 0; j < a.size(); ++j) {
        ga[j] += coef * b[j];
        gb[j] += coef * a[j];
      }
    }
  }
  return loss / static_cast<double>(p_count);
}

bool params_finite(const FourierPEParams &p) {
  for (const auto &slot : kParamSlots)
    if (!(p.*slot.member).all_finite())
      return false;
  return true;
}

} // namespace

double kernel_fit_loss(const FourierPEParams &params, const FourierPEConfig &config,
                       const TargetKernel &target, const PairSet &pairs, Stage stage) {
  const PositionBatch both = stack(pairs, config);
  const auto targets = targets_for(pairs, target);
  const Representation r = represent(both, params, config, stage, Mode::Eval, nullptr);
  return mse_and_grad(r.values, targets, nullptr);
}

KernelFitResult fit_kernel_target(const FourierPEConfig &config, FourierPEParams params,
                                  const TargetKernel &target, const PairSet &pairs,
                                  const KernelFitOptions &options, SeededRng &rng) {
  config.validate();
  check_params(params, config);
  if (options.stage == Stage::Fourier && config.features != FeatureMap::Fourier)
    throw std::invalid_argument("fourier-stage fitting needs Fourier features");
  if (options.kl && config.features != FeatureMap::Fourier)
    throw std::invalid_argument("the KL regularizer needs Fourier weights");

  const PositionBatch both = stack(pairs, config);
  const auto targets = targets_for(pairs, target);
  KernelFitResult result;
  std::optional<KlRegConfig> kl = options.kl;
  Tensor log_target({1});
  Tensor log_target_grad({1});
  if (kl)
    log_target[0] = kl->log_target_variance;

  AdamState adam{options.adam, 0, {}, {}};
  const Mode mode = config.dropout > 0.0 ? Mode::Train : Mode::Eval;

  for (std::size_t step = 0; step <= options.steps; ++step) {
    Representation r = represent(both, params, config, options.stage, mode, &rng);
    Tensor d_reps;
    LossRecord rec{step, mse_and_grad(r.values, targets, &d_reps), 0.0, 0.0};

    KlResult klr;
    if (kl) {
      kl->log_target_variance = log_target[0];
      klr = kl_loss(params.w_r, *kl);
      rec.kl_loss = klr.loss;
    }
    rec.total_loss = total_loss(rec.model_loss, rec.kl_loss, kl ? kl->alpha : 0.0);
    if (!std::isfinite(rec.total_loss))
      throw DivergenceError(step, "loss is not finite");
    result.trace.push_back(rec);
    if (step == options.steps)
      break;

    GradientStore grads = GradientStore::zeros_like(params, config);
    if (options.stage == Stage::Full) {
      grads = backward_encode(both, params, config, d_reps, &r.cache);
    } else {
      const Tensor d_features =
          d_reps.reshaped({both.count() * both.groups(), config.fourier_dim});
      grads.w_r = fourier_features_backward(r.group_inputs, r.phases, d_features);
    }

    std::vector<ParamRef> refs = trainable_refs(params, grads, config);
    if (kl) {
      if (grads.w_r.empty())
        throw std::invalid_argument("the KL regularizer needs trainable Fourier weights");
      for (std::size_t i = 0; i < grads.w_r.size(); ++i)
        grads.w_r[i] += kl->alpha * klr.grad_w_r[i];
      log_target_grad[0] = kl->alpha * klr.grad_log_target_variance;
      refs.push_back({"log_target_variance", &log_target, &log_target_grad});
    }
    adam_step(refs, adam);
    if (!params_finite(params) || !log_target.all_finite())
      throw DivergenceError(step, "parameters are not finite");
  }
  result.params = std::move(params);
  if (kl)
    result.log_target_variance = log_target[0];
  return result;
}

KernelFitResult fit_kernel_target(const FourierPEConfig &config, const TargetKernel &target,
                                  const PairSet &pairs, const KernelFitOptions &options,
                                  SeededRng &rng) {
  FourierPEParams params = init_params(config, rng);
  return fit_kernel_target(config, std::move(params), target, pairs, options, rng);
}

std::vector<KlStepRecord> regularize_fourier_weights(Tensor &w_r, KlRegConfig &cfg,
                                                     std::size_t steps, const AdamConfig &adam) {
  AdamState state{adam, 0, {}, {}};
  Tensor log_target({1}, cfg.log_target_variance);
  Tensor log_target_grad({1});
  std::vector<KlStepRecord> trace;
  for (std::size_t step = 0; step <= steps; ++step) {
    cfg.log_target_variance = log_target[0];
    KlResult r = kl_loss(w_r, cfg);
    if (!std::isfinite(r.loss))
      throw DivergenceError(step, "KL loss is not finite");
    trace.push_back({step, r.loss, r.mean, r.variance, cfg.target_variance()});
    if (step == steps)
      break;
    for (auto &g : r.grad_w_r.data())
      g *= cfg.alpha;
    log_target_grad[0] = cfg.alpha * r.grad_log_target_variance;
    const ParamRef refs[] = {{"w_r", &w_r, &r.grad_w_r},
                             {"log_target_variance", &log_target, &log_target_grad}};
    adam_step(refs, state);
  }
  return trace;
}

std::vector<double> smooth(std::span<const double> xs, double weight) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs)
    out.push_back(out.empty() ? x : weight * out.back() + (1.0 - weight) * x);
  return out;
}

} // namespace lffpe
