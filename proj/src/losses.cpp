#include "lffpe/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace lffpe {

KlRegConfig KlRegConfig::from_gamma(double alpha, double gamma) {
  if (!(alpha >= 0.0))
    throw std::invalid_argument("KL weight alpha must be nonnegative");
  if (!(gamma > 0.0))
    throw std::invalid_argument("gamma must be positive");
  return {alpha, -2.0 * std::log(gamma)};
}

double KlRegConfig::target_variance() const { return std::exp(log_target_variance); }

KlResult kl_loss(const Tensor &w_r, const KlRegConfig &cfg) {
  if (w_r.empty())
    throw std::invalid_argument("kl_loss: empty W_r");
  const double n = static_cast<double>(w_r.size());
  KlResult r;
  r.mean = sum(w_r.data()) / n;
  for (double v : w_r.data())
    r.variance += (v - r.mean) * (v - r.mean);
  r.variance /= n;
  if (!(r.variance > 0.0))
    throw std::domain_error("kl_loss: W_r has zero variance");

  const double target = cfg.target_variance();
  const double ratio = (r.variance + r.mean * r.mean) / target;
  r.loss = -0.5 * (1.0 - cfg.log_target_variance + std::log(r.variance) - ratio);

  const double d_var = -0.5 * (1.0 / r.variance - 1.0 / target);
  const double d_mean = r.mean / target;
  r.grad_w_r = Tensor(w_r.shape());
  for (std::size_t i = 0; i < w_r.size(); ++i)
    r.grad_w_r[i] = d_mean / n + d_var * 2.0 * (w_r[i] - r.mean) / n;
  r.grad_log_target_variance = -0.5 * (ratio - 1.0);
  return r;
}

double total_loss(double model_loss, double kl, double alpha) {
  if (!(alpha >= 0.0))
    throw std::invalid_argument("total_loss: alpha must be nonnegative");
  return model_loss + alpha * kl;
}

} // namespace lffpe
