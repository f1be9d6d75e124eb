#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lffpe/adam.hpp"
#include "lffpe/kernels.hpp"
#include "lffpe/losses.hpp"

namespace lffpe {

/// A training run produced a non-finite loss or parameter.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(std::size_t step, const std::string &what);
  [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

using TargetKernel = std::function<double(std::span<const double>, std::span<const double>)>;

/// Matched position pairs; row i of `first` is paired with row i of `second`.
struct PairSet {
  PositionBatch first;
  PositionBatch second;
};

/// `count` pairs with every coordinate uniform in [0, extent).
PairSet sample_pairs(std::size_t count, std::size_t groups, std::size_t coords, double extent,
                     SeededRng &rng);

struct LossRecord {
  std::size_t step = 0;
  double model_loss = 0.0;
  double kl_loss = 0.0;
  double total_loss = 0.0;
};

struct KernelFitOptions {
  std::size_t steps = 2000;
  AdamConfig adam{};
  /// Compare Fourier features r_x (trains W_r only) or full encodings.
  Stage stage = Stage::Full;
  std::optional<KlRegConfig> kl;
};

struct KernelFitResult {
  FourierPEParams params;
  std::vector<LossRecord> trace; // loss before each update, then the final loss
  std::optional<double> log_target_variance;

  [[nodiscard]] double initial_loss() const { return trace.front().model_loss; }
  [[nodiscard]] double final_loss() const { return trace.back().model_loss; }
};

/// Mean squared error between dot(repr(x), repr(y)) and target(x, y) over
/// the pair set, at the given stage.
double kernel_fit_loss(const FourierPEParams &params, const FourierPEConfig &config,
                       const TargetKernel &target, const PairSet &pairs, Stage stage);

/**
 * Full-batch Adam on the kernel-matching loss, optionally plus alpha times
 * the KL regularizer on W_r (with a trainable target variance). `rng`
 * drives dropout only. Throws DivergenceError on a non-finite value.
 */
KernelFitResult fit_kernel_target(const FourierPEConfig &config, FourierPEParams params,
                                  const TargetKernel &target, const PairSet &pairs,
                                  const KernelFitOptions &options, SeededRng &rng);

/// Convenience overload that draws the initial parameters from `rng`.
KernelFitResult fit_kernel_target(const FourierPEConfig &config, const TargetKernel &target,
                                  const PairSet &pairs, const KernelFitOptions &options,
                                  SeededRng &rng);

struct KlStepRecord {
  std::size_t step = 0;
  double kl = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double target_variance = 0.0;
};

/// Adam on alpha * KL alone, moving W_r and the target variance.
std::vector<KlStepRecord> regularize_fourier_weights(Tensor &w_r, KlRegConfig &cfg,
                                                     std::size_t steps, const AdamConfig &adam);

/// Exponential moving average; out[0] = xs[0].
std::vector<double> smooth(std::span<const double> xs, double weight = 0.9);

} // namespace lffpe
