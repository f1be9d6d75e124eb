#pragma once

#include <cstdint>
#include <variant>

#include "lffpe/tensor.hpp"

namespace lffpe {

/**
 * Counter-based generator: the n-th draw is a pure function of (key, n),
 * computed with the SplitMix64 finalizer. `split` derives an independent
 * stream, so work can be handed to other owners without sharing state.
 */
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double next_unit() noexcept;
  double uniform(double lo, double hi) noexcept;
  /// Box-Muller; consumes two draws per sample.
  double normal(double mean, double stddev) noexcept;
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  [[nodiscard]] SeededRng split(std::uint64_t stream) const noexcept;

private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct NormalDist {
  double mean = 0.0;
  double stddev = 1.0;
};

struct UniformDist {
  double lo = 0.0;
  double hi = 1.0;
};

using Distribution = std::variant<NormalDist, UniformDist>;

/// I.i.d. samples in row-major order. Rejects stddev <= 0 or lo >= hi.
Tensor sample(SeededRng &rng, const Distribution &dist, const Shape &shape);

} // namespace lffpe
