#include <doctest.h>

#include <cmath>

#include "lffpe/ops.hpp"
#include "lffpe/rng.hpp"
#include "lffpe/tensor.hpp"

using namespace lffpe;

TEST_CASE("tensor shape and data agree") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS((void)t.reshaped({4}), ShapeError);
  CHECK(t.reshaped({3, 2}).dim(0) == 3);
}

TEST_CASE("require_finite reports NaN and infinity") {
  Tensor t({2}, 0.0);
  CHECK_NOTHROW(require_finite(t, "t"));
  t[1] = std::nan("");
  CHECK_THROWS_AS(require_finite(t, "t"), std::domain_error);
  t[1] = INFINITY;
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("matmul examples") {
  CHECK(matmul(Tensor::identity(2), Tensor::matrix({{3, 4}, {5, 6}})) ==
        Tensor::matrix({{3, 4}, {5, 6}}));
  CHECK(matmul(Tensor::matrix({{2}}), Tensor::matrix({{7}})) == Tensor::matrix({{14}}));
  // Hand computation: [1 2; 3 4][5 6; 7 8] = [19 22; 43 50].
  CHECK(matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{5, 6}, {7, 8}})) ==
        Tensor::matrix({{19, 22}, {43, 50}}));
  CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
}

TEST_CASE("transposed products match explicit transposes") {
  SeededRng rng(3);
  const Tensor a = sample(rng, NormalDist{}, {4, 3});
  const Tensor b = sample(rng, NormalDist{}, {4, 5});
  const Tensor c = sample(rng, NormalDist{}, {6, 3});
  CHECK(max_abs_diff(matmul_tn(a, b), matmul(transpose(a), b)) < 1e-14);
  CHECK(max_abs_diff(matmul_nt(a, c), matmul(a, transpose(c))) < 1e-14);
}

TEST_CASE("gelu examples") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(gelu(10.0) == doctest::Approx(10.0).epsilon(1e-10));
  CHECK(std::abs(gelu(10.0) - 10.0) < 1e-9);
  // 1 * Phi(1) = 0.5 (1 + erf(1/sqrt 2)) = 0.841345 (erf table value 0.682689).
  CHECK(std::abs(gelu(1.0) - 0.841345) < 1e-6);
  const double h = 1e-6;
  for (double x : {-2.0, -0.3, 0.0, 0.7, 3.0})
    CHECK(std::abs(gelu_derivative(x) - (gelu(x + h) - gelu(x - h)) / (2 * h)) < 1e-8);
}

TEST_CASE("layer_norm examples") {
  const Tensor one = Tensor::vector({1, 1, 1});
  const Tensor zero({3});
  CHECK(layer_norm(Tensor::matrix({{4, 4, 4}}), one, zero, 1e-5) == Tensor::matrix({{0, 0, 0}}));
  const Tensor pm = layer_norm(Tensor::matrix({{1, -1}}), Tensor::vector({1, 1}), Tensor({2}), 0.0);
  CHECK(std::abs(pm[0] - 1.0) < 1e-15);
  CHECK(std::abs(pm[1] + 1.0) < 1e-15);
  // mean 2, population variance 2/3, so (x - 2) / sqrt(2/3) = -+1.2247449.
  const Tensor y = layer_norm(Tensor::matrix({{1, 2, 3}}), one, zero, 1e-12);
  CHECK(std::abs(y[0] + 1.224745) < 1e-6);
  CHECK(std::abs(y[1]) < 1e-12);
  CHECK(std::abs(y[2] - 1.224745) < 1e-6);
  CHECK_THROWS_AS(layer_norm(Tensor::matrix({{1, 2}}), one, zero, 1e-5), ShapeError);
}

TEST_CASE("layer_norm backward matches finite differences") {
  SeededRng rng(11);
  const Tensor x = sample(rng, NormalDist{}, {3, 4});
  const Tensor gain = sample(rng, NormalDist{1.0, 0.2}, {4});
  const Tensor bias = sample(rng, NormalDist{}, {4});
  const Tensor up = sample(rng, NormalDist{}, {3, 4});
  LayerNormCache cache;
  (void)layer_norm(x, gain, bias, 1e-6, &cache);
  const LayerNormGrads g = layer_norm_backward(up, gain, cache);
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double num = (dot(layer_norm(xp, gain, bias, 1e-6).data(), up.data()) -
                        dot(layer_norm(xm, gain, bias, 1e-6).data(), up.data())) /
                       (2 * h);
    CHECK(std::abs(num - g.input[i]) < 1e-7);
  }
}

TEST_CASE("softmax examples") {
  const Tensor s = softmax(Tensor::matrix({{2, 2, 2, 2}}));
  for (double v : s.data())
    CHECK(v == doctest::Approx(0.25));
  CHECK(softmax(Tensor::matrix({{-3.5}})) == Tensor::matrix({{1.0}}));
  const Tensor x = Tensor::matrix({{0.1, -2.0, 3.0}, {1000.0, 1001.0, 999.0}});
  Tensor shifted = x;
  for (auto &v : shifted.data())
    v += 123.0;
  CHECK(max_abs_diff(softmax(x), softmax(shifted)) < 1e-15);
  CHECK(softmax(x).all_finite());
}

TEST_CASE("rng is deterministic and splits independently") {
  SeededRng a(42), b(42), c(43);
  const Tensor ta = sample(a, NormalDist{}, {100});
  CHECK(ta == sample(b, NormalDist{}, {100}));
  CHECK_FALSE(ta == sample(c, NormalDist{}, {100}));
  SeededRng s1 = SeededRng(42).split(1), s2 = SeededRng(42).split(2);
  CHECK(s1.next_u64() != s2.next_u64());
  SeededRng u(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.next_unit();
    CHECK((v > 0.0 && v < 1.0));
    CHECK(u.below(7) < 7);
  }
}

TEST_CASE("sample moments match the distributions") {
  SeededRng rng(2024);
  const double gamma = 1.0;
  const Tensor n = sample(rng, NormalDist{0.0, 1.0 / gamma}, {1000000});
  const double mean = sum(n.data()) / 1e6;
  double var = 0.0;
  for (double v : n.data())
    var += (v - mean) * (v - mean);
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(std::sqrt(var / 1e6) - 1.0) < 0.01);
  const Tensor u = sample(rng, UniformDist{0.0, 1.0}, {1000000});
  CHECK(std::abs(sum(u.data()) / 1e6 - 0.5) < 0.01);
  CHECK_THROWS_AS(sample(rng, NormalDist{0.0, 0.0}, {3}), std::invalid_argument);
  CHECK_THROWS_AS(sample(rng, UniformDist{1.0, 1.0}, {3}), std::invalid_argument);
}
