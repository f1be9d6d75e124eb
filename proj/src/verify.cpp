#include "lffpe/verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "lffpe/gradients.hpp"
#include "lffpe/kernels.hpp"
#include "lffpe/serialization.hpp"

namespace lffpe {

namespace {

/// dot(r_x, r_y) for single M-dimensional positions.
double feature_dot(std::span<const double> x, std::span<const double> y, const Tensor &w_r) {
  const std::size_t m = x.size();
  std::vector<double> both(x.begin(), x.end());
  both.insert(both.end(), y.begin(), y.end());
  const Tensor ff = fourier_features(PositionBatch(Tensor({2, 1, m}, std::move(both))), w_r);
  const std::size_t f = ff.dim(2);
  return dot(std::span<const double>(ff.data().data(), f),
             std::span<const double>(ff.data().data() + f, f));
}

std::vector<double> draw(SeededRng &rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto &x : v)
    x = rng.uniform(lo, hi);
  return v;
}

} // namespace

std::vector<CheckResult> verify_shift(std::uint64_t seed) {
  constexpr std::size_t kTuples = 1000;
  constexpr std::size_t kDims[] = {1, 2, 4};
  double worst_shift = 0.0, worst_closed = 0.0, worst_self = 0.0;
  SeededRng rng = SeededRng(seed).split(0x5817);
  for (std::size_t t = 0; t < kTuples; ++t) {
    const std::size_t m = kDims[t % 3];
    const std::size_t half = 1 + rng.below(32);
    const double gamma = rng.uniform(0.25, 8.0);
    const Tensor w_r = sample(rng, NormalDist{0.0, 1.0 / gamma}, {half, m});
    const auto x = draw(rng, m, -10.0, 10.0);
    const auto y = draw(rng, m, -10.0, 10.0);
    const auto c = draw(rng, m, -10.0, 10.0);
    std::vector<double> xc(m), yc(m), delta(m);
    for (std::size_t i = 0; i < m; ++i) {
      xc[i] = x[i] + c[i];
      yc[i] = y[i] + c[i];
      delta[i] = x[i] - y[i];
    }
    const double base = feature_dot(x, y, w_r);
    worst_shift = std::max(worst_shift, std::abs(base - feature_dot(xc, yc, w_r)));
    worst_closed = std::max(worst_closed, std::abs(base - shift_fn(delta, w_r)));
    worst_self = std::max(worst_self, std::abs(feature_dot(x, x, w_r) - 0.5));
  }
  const std::string detail = "tuples=" + std::to_string(kTuples) + " M=1,2,4";
  return {
      {"shift", "shift_invariance", worst_shift < 1e-9, worst_shift, 1e-9, detail},
      {"shift", "closed_form", worst_closed < 1e-11, worst_closed, 1e-11, detail},
      {"shift", "self_similarity", worst_self < 1e-12, worst_self, 1e-12, detail},
  };
}

std::vector<CheckResult> verify_kernel(std::uint64_t seed, std::size_t seeds) {
  constexpr std::size_t kFourierDim = 4096;
  constexpr double kGammas[] = {1.0, 4.0, 100.0};
  constexpr double kRadii[] = {0.0, 0.5, 1.0, 2.0}; // multiples of gamma
  if (seeds < 2)
    throw std::invalid_argument("the kernel suite needs at least 2 seeds");
  std::vector<CheckResult> out;
  const SeededRng root = SeededRng(seed).split(0xCE41);
  std::uint64_t stream = 0;
  for (double gamma : kGammas)
    for (double k : kRadii) {
      const double distance = k * gamma;
      double sum = 0.0, sum_sq = 0.0;
      for (std::size_t s = 0; s < seeds; ++s) {
        SeededRng rng = root.split(stream++);
        const Tensor w_r = sample(rng, NormalDist{0.0, 1.0 / gamma}, {kFourierDim / 2, 2});
        const double angle = rng.uniform(0.0, 2.0 * std::acos(-1.0));
        const std::vector<double> x = draw(rng, 2, -gamma, gamma);
        const std::vector<double> y{x[0] - distance * std::cos(angle),
                                    x[1] - distance * std::sin(angle)};
        const double v = feature_dot(x, y, w_r);
        sum += v;
        sum_sq += v * v;
      }
      const double n = static_cast<double>(seeds);
      const double mean = sum / n;
      const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
      const double se = std::sqrt(var / n);
      const double expected = expected_fourier_kernel(distance, gamma);
      const double tol = std::max(3.0 * se, 1e-12);
      const double err = std::abs(mean - expected);
      out.push_back({"kernel",
                     "gamma=" + format_number(gamma) + ",dist=" + format_number(distance),
                     err <= tol, err, tol,
                     "mean=" + format_number(mean) + " expected=" + format_number(expected) +
                         " se=" + format_number(se) + " seeds=" + std::to_string(seeds)});
    }
  return out;
}

std::vector<CheckResult> verify_grad(std::uint64_t seed) {
  constexpr std::size_t kConfigs = 20;
  constexpr double kStep = 1e-6;
  std::vector<CheckResult> out;
  const SeededRng root = SeededRng(seed).split(0x64AD);
  for (std::size_t i = 0; i < kConfigs; ++i) {
    SeededRng rng = root.split(i);
    FourierPEConfig c;
    c.layer_norm = i % 2 == 1;
    // LayerNorm over any two values is +-1 whatever they are, so everything
    // upstream would get no gradient; LayerNorm configs use wider layers.
    c.fourier_dim = 2 * (1 + rng.below(3)) + (c.layer_norm ? 2 : 0);
    c.hidden_dim = 2 + rng.below(4) + (c.layer_norm ? 1 : 0);
    c.groups = 1 + rng.below(2);
    c.coords_per_group = 1 + rng.below(3);
    c.encoding_dim = c.groups * (1 + rng.below(3));
    c.gamma = rng.uniform(0.5, 2.0);
    FourierPEParams params = init_params(c, rng);
    if (c.layer_norm) {
      // Perturb the gains/biases so their gradients are not trivially symmetric.
      for (auto *t : {&params.ln1_gain, &params.ln1_bias, &params.ln2_gain, &params.ln2_bias})
        for (auto &v : t->data())
          v += rng.uniform(-0.3, 0.3);
    }
    const std::size_t n = 2 + rng.below(3);
    const PositionBatch x(sample(rng, UniformDist{-2.0, 2.0}, {n, c.groups, c.coords_per_group}));
    const Tensor upstream = sample(rng, NormalDist{0.0, 1.0}, {n, c.encoding_dim});

    const GradientStore analytic = backward_encode(x, params, c, upstream);
    const GradientStore numeric = finite_diff_grad(
        [&](const FourierPEParams &p) {
          const Tensor y = encode(x, p, c);
          return dot(y.data(), upstream.data());
        },
        params, c, kStep);
    double worst = 0.0;
    std::string worst_slot = "none";
    for (const auto &slot : kParamSlots) {
      if (!is_trainable(slot, c))
        continue;
      const double e = relative_error(analytic.*slot.member, numeric.*slot.member);
      if (e >= worst) {
        worst = e;
        worst_slot = std::string(slot.name);
      }
    }
    const std::string name = "config" + std::to_string(i);
    out.push_back({"grad", name, worst < 1e-5, worst, 1e-5,
                   "F=" + std::to_string(c.fourier_dim) + " H=" + std::to_string(c.hidden_dim) +
                       " D=" + std::to_string(c.encoding_dim) + " G=" + std::to_string(c.groups) +
                       " M=" + std::to_string(c.coords_per_group) +
                       " layer_norm=" + (c.layer_norm ? "on" : "off") + " worst_slot=" + worst_slot});
  }
  return out;
}

std::vector<CheckResult> run_suite(std::string_view suite, std::uint64_t seed) {
  if (suite == "shift")
    return verify_shift(seed);
  if (suite == "kernel")
    return verify_kernel(seed);
  if (suite == "grad")
    return verify_grad(seed);
  if (suite == "all") {
    auto out = verify_shift(seed);
    auto k = verify_kernel(seed);
    auto g = verify_grad(seed);
    out.insert(out.end(), k.begin(), k.end());
    out.insert(out.end(), g.begin(), g.end());
    return out;
  }
  throw std::invalid_argument("unknown suite '" + std::string(suite) +
                              "' (expected shift, kernel, grad or all)");
}

void write_report(std::ostream &out, const std::vector<CheckResult> &results) {
  std::size_t failed = 0;
  for (const auto &r : results) {
    failed += r.passed ? 0 : 1;
    out << "suite=" << r.suite << " check=" << r.name << " status=" << (r.passed ? "pass" : "fail")
        << " value=" << format_number(r.value) << " limit=" << format_number(r.limit);
    if (!r.detail.empty())
      out << ' ' << r.detail;
    out << '\n';
  }
  out << "summary checks=" << results.size() << " passed=" << results.size() - failed
      << " failed=" << failed << '\n';
}

bool all_passed(const std::vector<CheckResult> &results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult &r) { return r.passed; });
}

} // namespace lffpe
