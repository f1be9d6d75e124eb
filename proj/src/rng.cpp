#include "lffpe/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lffpe {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace

SeededRng::SeededRng(std::uint64_t seed) noexcept : seed_(seed), key_(mix64(seed + kGolden)) {}

std::uint64_t SeededRng::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double SeededRng::next_unit() noexcept {
  // 53 random mantissa bits, offset by half an ulp so 0 is never returned.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next_unit(); }

double SeededRng::normal(double mean, double stddev) noexcept {
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SeededRng::below(std::uint64_t n) {
  if (n == 0)
    throw std::invalid_argument("SeededRng::below: empty range");
  // Rejection keeps the result unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v = 0;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

SeededRng SeededRng::split(std::uint64_t stream) const noexcept {
  return SeededRng(mix64(key_ ^ mix64(stream + 0x632BE59BD9B4E019ULL)));
}

Tensor sample(SeededRng &rng, const Distribution &dist, const Shape &shape) {
  Tensor out(shape);
  if (const auto *n = std::get_if<NormalDist>(&dist)) {
    if (!(n->stddev > 0.0) || !std::isfinite(n->stddev) || !std::isfinite(n->mean))
      throw std::invalid_argument("normal distribution needs a finite positive stddev");
    for (auto &v : out.data())
      v = rng.normal(n->mean, n->stddev);
  } else {
    const auto &u = std::get<UniformDist>(dist);
    if (!(u.lo < u.hi) || !std::isfinite(u.lo) || !std::isfinite(u.hi))
      throw std::invalid_argument("uniform distribution needs finite lo < hi");
    for (auto &v : out.data())
      v = rng.uniform(u.lo, u.hi);
  }
  return out;
}

} // namespace lffpe
