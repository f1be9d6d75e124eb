#include "lffpe/fourier_encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lffpe/baselines.hpp"

namespace lffpe {

PositionBatch::PositionBatch(Tensor values) : values_(std::move(values)) {
  if (values_.rank() != 3)
    throw ShapeError("positions must be [N, G, M], got " + shape_to_string(values_.shape()));
  if (values_.dim(0) == 0 || values_.dim(1) == 0 || values_.dim(2) == 0)
    throw ShapeError("positions need N, G, M >= 1, got " + shape_to_string(values_.shape()));
  if (!values_.all_finite())
    throw std::invalid_argument("positions contain a non-finite coordinate");
}

PositionBatch PositionBatch::from_rows(const Tensor &rows, std::size_t groups,
                                       std::size_t coords) {
  if (rows.rank() != 2 || rows.dim(1) != groups * coords)
    throw ShapeError("expected [N, " + std::to_string(groups * coords) + "] positions, got " +
                     shape_to_string(rows.shape()));
  return PositionBatch(rows.reshaped({rows.dim(0), groups, coords}));
}

std::span<const double> PositionBatch::position(std::size_t n) const {
  return values_.data().subspan(n * width(), width());
}

Tensor PositionBatch::group_rows() const { return values_.reshaped({count() * groups(), coords()}); }

PositionBatch PositionBatch::normalized(std::span<const double> extents) const {
  const std::size_t m = coords();
  if (extents.size() != m && extents.size() != width())
    throw ShapeError("normalization needs " + std::to_string(m) + " or " +
                     std::to_string(width()) + " extents");
  Tensor out = values_;
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t c = extents.size() == m ? i % m : i % width();
    if (!(extents[c] > 0.0))
      throw std::invalid_argument("normalization extents must be positive");
    data[i] = (data[i] + 0.5) / extents[c];
  }
  return PositionBatch(std::move(out));
}

PositionBatch PositionBatch::select(std::span<const std::size_t> rows) const {
  Tensor out({rows.size(), groups(), coords()});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= count())
      throw std::out_of_range("position row out of range");
    const auto src = position(rows[r]);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * width()));
  }
  return PositionBatch(std::move(out));
}

std::string_view to_string(InitKind k) { return k == InitKind::Normal ? "normal" : "uniform"; }

std::string_view to_string(FeatureMap f) {
  switch (f) {
  case FeatureMap::Fourier:
    return "fourier";
  case FeatureMap::Raw:
    return "raw";
  case FeatureMap::Sine:
    return "sine";
  }
  return "fourier";
}

InitKind parse_init_kind(std::string_view s) {
  if (s == "normal")
    return InitKind::Normal;
  if (s == "uniform")
    return InitKind::Uniform;
  throw std::invalid_argument("unknown init '" + std::string(s) + "'");
}

FeatureMap parse_feature_map(std::string_view s) {
  if (s == "fourier")
    return FeatureMap::Fourier;
  if (s == "raw")
    return FeatureMap::Raw;
  if (s == "sine")
    return FeatureMap::Sine;
  throw std::invalid_argument("unknown feature map '" + std::string(s) + "'");
}

void FourierPEConfig::validate() const {
  auto fail = [](const std::string &msg) { throw std::invalid_argument(msg); };
  if (coords_per_group == 0)
    fail("coords_per_group must be positive");
  if (groups == 0)
    fail("groups must be positive");
  if (hidden_dim == 0)
    fail("hidden_dim must be positive");
  if (encoding_dim == 0)
    fail("encoding_dim must be positive");
  if (encoding_dim % groups != 0)
    fail("encoding_dim " + std::to_string(encoding_dim) + " is not divisible by groups " +
         std::to_string(groups));
  if (features != FeatureMap::Raw) {
    if (fourier_dim == 0 || fourier_dim % 2 != 0)
      fail("fourier_dim must be a positive even number, got " + std::to_string(fourier_dim));
  }
  if (features == FeatureMap::Sine &&
      (fourier_dim % coords_per_group != 0 || (fourier_dim / coords_per_group) % 2 != 0))
    fail("sine features need fourier_dim / coords_per_group to be an even integer");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    fail("gamma must be positive");
  if (init == InitKind::Uniform && !(init_lo < init_hi))
    fail("uniform init needs init_lo < init_hi");
  if (!(dropout >= 0.0 && dropout < 1.0))
    fail("dropout must lie in [0, 1)");
  if (!(layer_norm_eps > 0.0))
    fail("layer_norm_eps must be positive");
  if (features != FeatureMap::Fourier && trainable_fourier)
    fail("trainable_fourier requires fourier features");
}

std::size_t FourierPEConfig::feature_width() const {
  return features == FeatureMap::Raw ? coords_per_group : fourier_dim;
}

void check_params(const FourierPEParams &p, const FourierPEConfig &c) {
  auto expect = [](const Tensor &t, const Shape &shape, std::string_view name) {
    if (t.shape() != shape)
      throw ShapeError(std::string(name) + " has shape " + shape_to_string(t.shape()) +
                       ", expected " + shape_to_string(shape));
  };
  const std::size_t fw = c.feature_width();
  if (c.features == FeatureMap::Fourier)
    expect(p.w_r, {c.fourier_dim / 2, c.coords_per_group}, "w_r");
  else if (!p.w_r.empty())
    throw ShapeError("w_r present for a non-Fourier feature map");
  expect(p.w1, {fw, c.hidden_dim}, "w1");
  expect(p.b1, {c.hidden_dim}, "b1");
  expect(p.w2, {c.hidden_dim, c.group_dim()}, "w2");
  expect(p.b2, {c.group_dim()}, "b2");
  if (c.layer_norm) {
    expect(p.ln1_gain, {fw}, "ln1_gain");
    expect(p.ln1_bias, {fw}, "ln1_bias");
    expect(p.ln2_gain, {c.hidden_dim}, "ln2_gain");
    expect(p.ln2_bias, {c.hidden_dim}, "ln2_bias");
  } else if (!p.ln1_gain.empty() || !p.ln2_gain.empty()) {
    throw ShapeError("layer norm parameters present while layer_norm is off");
  }
}

FourierPEParams init_params(const FourierPEConfig &config, SeededRng &rng) {
  config.validate();
  FourierPEParams p;
  const std::size_t fw = config.feature_width();
  if (config.features == FeatureMap::Fourier) {
    const Distribution dist = config.init == InitKind::Normal
                                  ? Distribution{NormalDist{0.0, 1.0 / config.gamma}}
                                  : Distribution{UniformDist{config.init_lo, config.init_hi}};
    p.w_r = sample(rng, dist, {config.fourier_dim / 2, config.coords_per_group});
  }
  p.w1 = sample(rng, NormalDist{0.0, 1.0 / std::sqrt(static_cast<double>(fw))},
                {fw, config.hidden_dim});
  p.b1 = Tensor({config.hidden_dim});
  p.w2 = sample(rng, NormalDist{0.0, 1.0 / std::sqrt(static_cast<double>(config.hidden_dim))},
                {config.hidden_dim, config.group_dim()});
  p.b2 = Tensor({config.group_dim()});
  if (config.layer_norm) {
    p.ln1_gain = Tensor({fw}, 1.0);
    p.ln1_bias = Tensor({fw});
    p.ln2_gain = Tensor({config.hidden_dim}, 1.0);
    p.ln2_bias = Tensor({config.hidden_dim});
  }
  return p;
}

namespace {

// cos/sin of the phases laid out as [cos block || sin block], scaled.
Tensor trig_features(const Tensor &phases) {
  const std::size_t rows = phases.dim(0), half = phases.dim(1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(2 * half));
  Tensor out({rows, 2 * half});
  for (std::size_t r = 0; r < rows; ++r) {
    const auto u = phases.row(r);
    auto o = out.row(r);
    for (std::size_t k = 0; k < half; ++k) {
      o[k] = scale * std::cos(u[k]);
      o[half + k] = scale * std::sin(u[k]);
    }
  }
  return out;
}

Tensor features_for_rows(const Tensor &group_inputs, const FourierPEParams &params,
                         const FourierPEConfig &config, Tensor *phases_out) {
  switch (config.features) {
  case FeatureMap::Fourier: {
    Tensor phases = matmul_nt(group_inputs, params.w_r);
    Tensor f = trig_features(phases);
    if (phases_out)
      *phases_out = std::move(phases);
    return f;
  }
  case FeatureMap::Raw:
    return group_inputs;
  case FeatureMap::Sine: {
    Tensor out({group_inputs.dim(0), config.fourier_dim});
    for (std::size_t r = 0; r < group_inputs.dim(0); ++r) {
      const Tensor s = sine_concat_md(group_inputs.row(r), config.fourier_dim);
      std::copy(s.data().begin(), s.data().end(), out.row(r).begin());
    }
    return out;
  }
  }
  throw std::logic_error("unhandled feature map");
}

} // namespace

Tensor fourier_features(const PositionBatch &x, const Tensor &w_r) {
  if (w_r.rank() != 2 || w_r.dim(1) != x.coords())
    throw ShapeError("w_r shape " + shape_to_string(w_r.shape()) + " does not match M = " +
                     std::to_string(x.coords()));
  const Tensor phases = matmul_nt(x.group_rows(), w_r);
  return trig_features(phases).reshaped({x.count(), x.groups(), 2 * w_r.dim(0)});
}

Tensor feature_map(const PositionBatch &x, const FourierPEParams &params,
                   const FourierPEConfig &config) {
  if (x.groups() != config.groups || x.coords() != config.coords_per_group)
    throw ShapeError("positions " + shape_to_string(x.values().shape()) +
                     " do not match config G = " + std::to_string(config.groups) +
                     ", M = " + std::to_string(config.coords_per_group));
  const Tensor f = features_for_rows(x.group_rows(), params, config, nullptr);
  return f.reshaped({x.count(), x.groups(), f.dim(1)});
}

Tensor mlp_modulate(const Tensor &features, const FourierPEParams &params,
                    const FourierPEConfig &config, Mode mode, SeededRng *rng,
                    EncodeCache *cache) {
  if (features.rank() != 3 || features.dim(2) != config.feature_width())
    throw ShapeError("mlp_modulate: features " + shape_to_string(features.shape()) +
                     " do not end in width " + std::to_string(config.feature_width()));
  check_params(params, config);
  const std::size_t n = features.dim(0), g = features.dim(1);
  Tensor rows = features.reshaped({n * g, features.dim(2)});

  Tensor mlp_in = config.layer_norm
                      ? layer_norm(rows, params.ln1_gain, params.ln1_bias, config.layer_norm_eps,
                                   cache ? &cache->ln1 : nullptr)
                      : rows;
  Tensor pre = add_bias(matmul(mlp_in, params.w1), params.b1);
  Tensor act = gelu(pre);

  Tensor drop_scale;
  if (mode == Mode::Train && config.dropout > 0.0) {
    if (!rng)
      throw std::invalid_argument("dropout in training mode needs an rng");
    const double keep = 1.0 - config.dropout;
    drop_scale = Tensor(act.shape());
    for (auto &s : drop_scale.data())
      s = rng->next_unit() < keep ? 1.0 / keep : 0.0;
    for (std::size_t i = 0; i < act.size(); ++i)
      act[i] *= drop_scale[i];
  }

  Tensor proj_in = config.layer_norm
                       ? layer_norm(act, params.ln2_gain, params.ln2_bias, config.layer_norm_eps,
                                    cache ? &cache->ln2 : nullptr)
                       : act;
  Tensor y = add_bias(matmul(proj_in, params.w2), params.b2);
  require_finite(y, "mlp_modulate");

  if (cache) {
    cache->features = std::move(rows);
    cache->mlp_input = std::move(mlp_in);
    cache->pre_activation = std::move(pre);
    cache->dropout_scale = std::move(drop_scale);
    cache->projection_input = std::move(proj_in);
  }
  return y.reshaped({n, g, config.group_dim()});
}

Tensor encode(const PositionBatch &x, const FourierPEParams &params,
              const FourierPEConfig &config, Mode mode, SeededRng *rng, EncodeCache *cache) {
  config.validate();
  if (x.groups() != config.groups || x.coords() != config.coords_per_group)
    throw ShapeError("positions " + shape_to_string(x.values().shape()) +
                     " do not match config G = " + std::to_string(config.groups) +
                     ", M = " + std::to_string(config.coords_per_group));
  check_params(params, config);
  Tensor group_inputs = x.group_rows();
  Tensor phases;
  const Tensor f = features_for_rows(group_inputs, params, config, cache ? &phases : nullptr);
  Tensor y = mlp_modulate(f.reshaped({x.count(), x.groups(), f.dim(1)}), params, config, mode,
                          rng, cache);
  if (cache) {
    cache->group_inputs = std::move(group_inputs);
    cache->phases = std::move(phases);
  }
  return y.reshaped({x.count(), config.encoding_dim});
}

} // namespace lffpe
