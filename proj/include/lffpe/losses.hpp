#pragma once

#include "lffpe/tensor.hpp"

namespace lffpe {

/// KL regularizer settings. The target variance is stored as its log so
/// it stays positive while being trained.
struct KlRegConfig {
  double alpha = 1.0;
  double log_target_variance = 0.0;

  /// Target variance initialized to gamma^-2.
  static KlRegConfig from_gamma(double alpha, double gamma);
  [[nodiscard]] double target_variance() const;
};

struct KlResult {
  double loss = 0.0;
  double mean = 0.0;     // empirical mean of W_r
  double variance = 0.0; // population variance of W_r
  Tensor grad_w_r;
  double grad_log_target_variance = 0.0;
};

/**
 * -1/2 (1 - log s2bar + log s2 - (s2 + mu^2) / s2bar), where mu and s2
 * are the empirical mean and population variance over all entries of w_r.
 * Throws std::domain_error when w_r has zero variance.
 */
KlResult kl_loss(const Tensor &w_r, const KlRegConfig &cfg);

/// model_loss + alpha * kl.
double total_loss(double model_loss, double kl, double alpha);

} // namespace lffpe
