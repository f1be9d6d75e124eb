#include "lffpe/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lffpe {

namespace {

void require_matrix(const Tensor &t, const char *op) {
  if (t.rank() != 2)
    throw ShapeError(std::string(op) + ": expected a 2-D tensor, got " +
                     shape_to_string(t.shape()));
}

} // namespace

Tensor matmul(const Tensor &a, const Tensor &b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul: inner dimensions differ, " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    auto out = c.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      const auto brow = b.row(p);
      for (std::size_t j = 0; j < n; ++j)
        out[j] += aip * brow[j];
    }
  }
  return c;
}

Tensor matmul_tn(const Tensor &a, const Tensor &b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul_tn: leading dimensions differ");
  Tensor c({m, n});
  for (std::size_t p = 0; p < k; ++p) {
    const auto arow = a.row(p);
    const auto brow = b.row(p);
    for (std::size_t i = 0; i < m; ++i) {
      const double api = arow[i];
      auto out = c.row(i);
      for (std::size_t j = 0; j < n; ++j)
        out[j] += api * brow[j];
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor &a, const Tensor &b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k)
    throw ShapeError("matmul_nt: trailing dimensions differ");
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c.at(i, j) = dot(a.row(i), b.row(j));
  return c;
}

Tensor transpose(const Tensor &a) {
  require_matrix(a, "transpose");
  Tensor t({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j)
      t.at(j, i) = a.at(i, j);
  return t;
}

Tensor add_bias(const Tensor &x, const Tensor &bias) {
  if (bias.size() != x.cols())
    throw ShapeError("add_bias: bias length " + std::to_string(bias.size()) +
                     " does not match width " + std::to_string(x.cols()));
  Tensor out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] += bias[j];
  }
  return out;
}

Tensor column_sums(const Tensor &x) {
  Tensor out({x.cols()});
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < row.size(); ++j)
      out[j] += row[j];
  }
  return out;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  return cdf + x * pdf;
}

Tensor gelu(const Tensor &x) {
  Tensor out = x;
  for (auto &v : out.data())
    v = gelu(v);
  return out;
}

Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias, double eps,
                  LayerNormCache *cache) {
  const std::size_t d = x.cols();
  if (d == 0)
    throw ShapeError("layer_norm: empty last axis");
  if (gain.size() != d || bias.size() != d)
    throw ShapeError("layer_norm: gain/bias length must equal " + std::to_string(d));
  Tensor out(x.shape());
  if (cache) {
    cache->normalized = Tensor(x.shape());
    cache->inv_std.assign(x.rows(), 0.0);
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    const double mean = sum(in) / static_cast<double>(d);
    double var = 0.0;
    for (double v : in)
      var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    auto o = out.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double xhat = (in[j] - mean) * inv_std;
      o[j] = gain[j] * xhat + bias[j];
      if (cache)
        cache->normalized.row(r)[j] = xhat;
    }
    if (cache)
      cache->inv_std[r] = inv_std;
  }
  return out;
}

LayerNormGrads layer_norm_backward(const Tensor &upstream, const Tensor &gain,
                                   const LayerNormCache &cache) {
  const std::size_t d = upstream.cols();
  LayerNormGrads g{Tensor(upstream.shape()), Tensor({d}), Tensor({d})};
  for (std::size_t r = 0; r < upstream.rows(); ++r) {
    const auto dy = upstream.row(r);
    const auto xhat = cache.normalized.row(r);
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dxhat = dy[j] * gain[j];
      mean_dxhat += dxhat;
      mean_dxhat_xhat += dxhat * xhat[j];
      g.gain[j] += dy[j] * xhat[j];
      g.bias[j] += dy[j];
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    auto dx = g.input.row(r);
    for (std::size_t j = 0; j < d; ++j)
      dx[j] = cache.inv_std[r] * (dy[j] * gain[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
  }
  return g;
}

Tensor softmax(const Tensor &x) {
  if (x.cols() == 0)
    throw ShapeError("softmax: empty last axis");
  Tensor out(x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    const double m = *std::max_element(in.begin(), in.end());
    auto o = out.row(r);
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - m);
      z += o[j];
    }
    for (auto &v : o)
      v /= z;
  }
  return out;
}

} // namespace lffpe
