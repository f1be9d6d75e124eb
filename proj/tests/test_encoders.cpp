#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lffpe/encoder_spec.hpp"
#include "lffpe/presets.hpp"
#include "lffpe/serialization.hpp"

using namespace lffpe;

namespace {

FourierPEConfig small_config(std::size_t g = 2, std::size_t m = 2) {
  FourierPEConfig c;
  c.fourier_dim = 8;
  c.hidden_dim = 4;
  c.encoding_dim = 8;
  c.groups = g;
  c.coords_per_group = m;
  c.gamma = 1.0;
  return c;
}

PositionBatch random_batch(std::size_t n, std::size_t g, std::size_t m, SeededRng &rng) {
  return PositionBatch(sample(rng, UniformDist{-3.0, 3.0}, {n, g, m}));
}

} // namespace

TEST_CASE("position batch validation") {
  CHECK_THROWS_AS(PositionBatch(Tensor({0, 1, 2})), ShapeError);
  CHECK_THROWS_AS(PositionBatch(Tensor({3, 2})), ShapeError);
  Tensor bad({1, 1, 2});
  bad[0] = std::nan("");
  CHECK_THROWS(PositionBatch(bad));
  const PositionBatch x(Tensor({1, 1, 2}, std::vector<double>{0, 63}));
  const double extents[] = {64, 64};
  const PositionBatch n = x.normalized(extents);
  CHECK(n.values()[0] == doctest::Approx(0.5 / 64));
  CHECK(n.values()[1] == doctest::Approx(63.5 / 64));
}

TEST_CASE("config validation") {
  FourierPEConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  c.fourier_dim = 7;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config();
  c.encoding_dim = 7;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config();
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("fourier_features examples") {
  const Tensor w_r = Tensor::matrix({{0.3, -1.2}, {2.0, 0.5}, {-0.7, 0.1}});
  const Tensor zero = fourier_features(PositionBatch(Tensor({1, 1, 2})), w_r);
  const double s = 1.0 / std::sqrt(6.0);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(zero[k] == doctest::Approx(s).epsilon(1e-15));
    CHECK(zero[3 + k] == 0.0);
  }
  // cos(pi/2) = 0, sin(pi/2) = 1.
  const double half_pi = std::acos(-1.0) / 2;
  const Tensor one = fourier_features(PositionBatch(Tensor({1, 1, 1}, std::vector<double>{half_pi})),
                                      Tensor::matrix({{1.0}}));
  CHECK(std::abs(one[0]) < 1e-12);
  CHECK(std::abs(one[1] - 1.0 / std::sqrt(2.0)) < 1e-12);

  SeededRng rng(1);
  const PositionBatch x = random_batch(5, 3, 2, rng);
  const Tensor ff = fourier_features(x, w_r);
  CHECK(ff.shape() == Shape{5, 3, 6});
  for (std::size_t r = 0; r < 15; ++r)
    CHECK(std::abs(dot(ff.row(r), ff.row(r)) - 0.5) < 1e-15);
}

TEST_CASE("init_params statistics and shapes") {
  FourierPEConfig c = small_config(1, 2);
  c.fourier_dim = 4096;
  SeededRng rng(9);
  const FourierPEParams p = init_params(c, rng);
  CHECK(p.w_r.shape() == Shape{2048, 2});
  double ss = 0.0;
  for (double v : p.w_r.data())
    ss += v * v;
  CHECK(std::abs(std::sqrt(ss / static_cast<double>(p.w_r.size())) - 1.0) < 0.03);
  for (double v : p.b1.data())
    CHECK(v == 0.0);
  for (double v : p.b2.data())
    CHECK(v == 0.0);

  const auto &widget = std::get<FourierMlp>(find_preset("widget-2-2").spec).config;
  const FourierPEParams wp = init_params(widget, rng);
  double ws = 0.0;
  for (double v : wp.w_r.data())
    ws += v * v;
  CHECK(std::sqrt(ws / static_cast<double>(wp.w_r.size())) == doctest::Approx(0.01).epsilon(0.2));

  FourierPEConfig u = small_config();
  u.init = InitKind::Uniform;
  u.init_lo = -0.5;
  u.init_hi = 0.25;
  const FourierPEParams up = init_params(u, rng);
  for (double v : up.w_r.data())
    CHECK((v >= -0.5 && v < 0.25));
}

TEST_CASE("mlp_modulate examples") {
  const FourierPEConfig c = small_config();
  SeededRng rng(4);
  FourierPEParams p = init_params(c, rng);
  const PositionBatch x = random_batch(3, 2, 2, rng);
  CHECK(mlp_modulate(fourier_features(x, p.w_r), p, c).shape() == Shape{3, 2, 4});

  p.w1 = Tensor(p.w1.shape());
  p.b2 = Tensor::vector({1, -2, 3, 0.5});
  const Tensor y = mlp_modulate(fourier_features(x, p.w_r), p, c);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(y.row(r)[j] == p.b2[j]);
}

TEST_CASE("mlp_modulate single hidden unit against a scalar pipeline") {
  FourierPEConfig c;
  c.fourier_dim = 2;
  c.hidden_dim = 1;
  c.encoding_dim = 1;
  c.groups = 1;
  c.coords_per_group = 1;
  FourierPEParams p;
  p.w_r = Tensor::matrix({{0.8}});
  p.w1 = Tensor::matrix({{1.5}, {-0.5}});
  p.b1 = Tensor::vector({0.1});
  p.w2 = Tensor::matrix({{2.0}});
  p.b2 = Tensor::vector({-0.3});
  const double x = 1.25;
  const double f0 = std::cos(0.8 * x) / std::sqrt(2.0), f1 = std::sin(0.8 * x) / std::sqrt(2.0);
  const double h = 1.5 * f0 - 0.5 * f1 + 0.1;
  const double gelu_h = 0.5 * h * (1.0 + std::erf(h / std::sqrt(2.0)));
  const double expected = 2.0 * gelu_h - 0.3;
  const Tensor y = encode(PositionBatch(Tensor({1, 1, 1}, std::vector<double>{x})), p, c);
  CHECK(std::abs(y[0] - expected) < 1e-14);
}

TEST_CASE("encode shape contract and group layout") {
  const FourierPEConfig c = small_config();
  SeededRng rng(5);
  const FourierPEParams p = init_params(c, rng);
  const PositionBatch x = random_batch(3, 2, 2, rng);
  const Tensor y = encode(x, p, c);
  CHECK(y.shape() == Shape{3, 8});

  FourierPEConfig one = small_config(1, 2);
  const FourierPEParams p1 = init_params(one, rng);
  const PositionBatch x1 = random_batch(4, 1, 2, rng);
  const Tensor direct = mlp_modulate(fourier_features(x1, p1.w_r), p1, one);
  CHECK(encode(x1, p1, one).values() == direct.values());

  Tensor twin({2, 2, 2});
  for (std::size_t i = 0; i < 4; ++i)
    twin[i] = twin[4 + i] = 0.37 * static_cast<double>(i);
  const Tensor yt = encode(PositionBatch(twin), p, c);
  for (std::size_t j = 0; j < 8; ++j)
    CHECK(yt.at(0, j) == yt.at(1, j));

  CHECK_THROWS_AS(encode(random_batch(2, 1, 2, rng), p, c), ShapeError);
}

TEST_CASE("dropout is active only in training mode and is reproducible") {
  FourierPEConfig c = small_config();
  c.dropout = 0.5;
  SeededRng rng(6);
  const FourierPEParams p = init_params(c, rng);
  const PositionBatch x = random_batch(10, 2, 2, rng);
  CHECK(encode(x, p, c, Mode::Eval) == encode(x, p, c, Mode::Eval));
  SeededRng d1(1), d2(1);
  const Tensor t1 = encode(x, p, c, Mode::Train, &d1);
  CHECK(t1 == encode(x, p, c, Mode::Train, &d2));
  CHECK_FALSE(t1 == encode(x, p, c, Mode::Eval));
  CHECK_THROWS(encode(x, p, c, Mode::Train, nullptr));
}

TEST_CASE("sine_1d examples") {
  const Tensor z = sine_1d(0.0, 8);
  for (std::size_t i = 0; i < 8; ++i)
    CHECK(z[i] == (i % 2 == 0 ? 0.0 : 1.0));
  const Tensor one = sine_1d(1.0, 8);
  CHECK(std::abs(one[0] - 0.841471) < 1e-6);
  CHECK(std::abs(one[1] - 0.540302) < 1e-6);
  // The wavelength endpoint base^(2d/D) = 10000: with D = 4 and d = 1 the
  // exponent is 1/2, so base 10000^2 puts p = 10000 at phase exactly 1.
  const Tensor end = sine_1d(10000.0, 4, 10000.0 * 10000.0);
  CHECK(std::abs(end[2] - std::sin(1.0)) < 1e-12);
  CHECK(std::abs(end[3] - std::cos(1.0)) < 1e-12);
  CHECK_THROWS_AS(sine_1d(0.0, 3), std::invalid_argument);
}

TEST_CASE("sine_concat_md and md_sine examples") {
  const double origin[] = {0.0, 0.0};
  const Tensor z = sine_concat_md(origin, 16);
  const Tensor block = sine_1d(0.0, 8);
  for (std::size_t i = 0; i < 16; ++i)
    CHECK(z[i] == block[i % 8]);
  const double p[] = {3.0, -7.5};
  const Tensor s = sine_concat_md(p, 16);
  CHECK(dot(s.data(), s.data()) == doctest::Approx(8.0).epsilon(1e-14));

  const Tensor m0 = md_sine(origin, 8);
  for (std::size_t i = 0; i < 8; ++i)
    CHECK(m0[i] == (i % 2 == 0 ? 0.0 : 1.0));
  const double ones[] = {1.0, 1.0};
  const Tensor m1 = md_sine(ones, 8);
  CHECK(std::abs(m1[0] - 0.909297) < 1e-6);
  CHECK(std::abs(m1[1] + 0.416147) < 1e-6);
  const double xy[] = {0.4, 2.2};
  CHECK(md_sine(xy, 8)[0] == doctest::Approx(std::sin(2.6)));
  const double three[] = {1, 2, 3};
  CHECK_THROWS_AS(md_sine(three, 8), std::invalid_argument);
}

TEST_CASE("embedding lookup") {
  SeededRng rng(7);
  const EncoderSpec e2 = find_preset("embed-2d").spec;
  const auto t2 = std::get<EmbedTable>(init_encoder_params(e2, rng));
  CHECK(t2.width() == 768);
  CHECK(output_dim(e2) == 768);
  const EncoderSpec e1 = find_preset("embed-1d").spec;
  const auto t1 = std::get<EmbedTable>(init_encoder_params(e1, rng));
  CHECK(t1.tables.at(0).shape() == Shape{4096, 768});

  EmbedTable small = EmbedTable::init(std::vector<std::size_t>{3, 4},
                                      std::vector<std::size_t>{2, 3}, rng);
  for (auto &v : small.tables[0].row(0))
    v = 0.0;
  const std::int64_t idx[] = {0, 2};
  const Tensor out = embed_lookup(idx, small);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
  CHECK(out[4] == small.tables[1].at(2, 2));
  const std::int64_t bad[] = {3, 0};
  CHECK_THROWS_AS(embed_lookup(bad, small), UnseenPositionError);
  CHECK(embed_lookup(bad, small, OutOfRange::Clamp)[0] == small.tables[0].at(2, 0));

  const EmbedND &flat = std::get<EmbedND>(e1);
  const double pos[] = {2.0, 5.0};
  CHECK(embed_indices(flat, pos) == std::vector<std::int64_t>{2 * 64 + 5});
  const double frac[] = {2.5, 5.0};
  CHECK_THROWS_AS(embed_indices(flat, frac), std::invalid_argument);
}

TEST_CASE("combine") {
  SeededRng rng(8);
  const Tensor pe = sample(rng, NormalDist{}, {3, 4});
  const Tensor content = sample(rng, NormalDist{}, {3, 4});
  CHECK(combine(Tensor({3, 4}), pe, CombineMode::Add) == pe);
  CHECK(combine(Tensor({5, 128}), Tensor({5, 64}), CombineMode::Concat).dim(1) == 192);
  const Tensor back = combine(content, pe, CombineMode::Add) - content;
  CHECK(max_abs_diff(back, pe) < 1e-15);
  CHECK_THROWS_AS(combine(Tensor({3, 5}), pe, CombineMode::Add), ShapeError);
}

TEST_CASE("every encoder variant produces [N, D] and respects the spec width") {
  SeededRng rng(10);
  for (const auto &preset : all_presets()) {
    CAPTURE(preset.name);
    const std::size_t width = input_width(preset.spec);
    Tensor raw({3, 1, width});
    for (std::size_t i = 0; i < raw.size(); ++i)
      raw[i] = static_cast<double>((i * 7) % 10);
    const EncoderParams params = init_encoder_params(preset.spec, rng);
    const Tensor y = encode_positions(preset.spec, params, PositionBatch(raw));
    CHECK(y.shape() == Shape{3, output_dim(preset.spec)});
    CHECK(y.all_finite());
  }
}

TEST_CASE("presets are unique and round-trip through the config format") {
  std::vector<std::string> names;
  for (const auto &p : all_presets()) {
    CAPTURE(p.name);
    CHECK(std::find(names.begin(), names.end(), p.name) == names.end());
    names.push_back(p.name);
    const std::string text = serialize_spec(p.spec);
    const EncoderSpec back = parse_spec(text);
    CHECK(back == p.spec);
    CHECK(serialize_spec(back) == text);
    CHECK_FALSE(p.provenance.empty());
  }
  CHECK(std::get<FourierMlp>(find_preset("reformer-s41").spec).config.fourier_dim == 384);
  CHECK(std::get<FourierMlp>(find_preset("reformer-apxD").spec).config.fourier_dim == 768);
  CHECK_THROWS_AS(find_preset("nope"), std::invalid_argument);
}

TEST_CASE("random configs round-trip through the config format") {
  SeededRng rng(12);
  for (int i = 0; i < 200; ++i) {
    FourierPEConfig c;
    c.groups = 1 + rng.below(4);
    c.coords_per_group = 1 + rng.below(4);
    c.fourier_dim = 2 * (1 + rng.below(64));
    c.hidden_dim = 1 + rng.below(64);
    c.encoding_dim = c.groups * (1 + rng.below(32));
    c.gamma = std::exp(rng.uniform(-5.0, 5.0));
    c.layer_norm = rng.below(2) == 1;
    c.dropout = rng.below(2) == 1 ? rng.uniform(0.0, 0.9) : 0.0;
    c.trainable_fourier = rng.below(2) == 1;
    if (rng.below(3) == 0) {
      c.init = InitKind::Uniform;
      c.init_lo = rng.uniform(-2.0, 0.0);
      c.init_hi = c.init_lo + rng.uniform(0.1, 3.0);
    }
    const EncoderSpec spec = FourierMlp{c};
    CHECK(parse_spec(serialize_spec(spec)) == spec);
  }
}

TEST_CASE("config parse errors") {
  const std::string good = serialize_spec(find_preset("detr").spec);
  CHECK_THROWS_AS(parse_spec(good + "bogus=1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_spec(good + "gamma=2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_spec("variant=learnable-fourier\nfourier_dim=8\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_spec("variant=warp\n"), std::invalid_argument);
  CHECK_NOTHROW(parse_spec("# comment\n\n" + good));
}

TEST_CASE("checkpoint round trip") {
  SeededRng rng(13);
  for (const char *name : {"widget-2-2", "reformer-s41", "embed-2d"}) {
    CAPTURE(name);
    const EncoderSpec spec = find_preset(name).spec;
    const EncoderParams params = init_encoder_params(spec, rng);
    std::stringstream buf;
    write_checkpoint(buf, Checkpoint{spec, to_named(params)});
    const Checkpoint back = read_checkpoint(buf);
    CHECK(back.spec == spec);
    CHECK(from_named(back.spec, back.tensors) == params);
  }
  std::stringstream junk("NOTACKPT");
  CHECK_THROWS_AS(read_checkpoint(junk), ParseError);
  const EncoderSpec spec = find_preset("detr").spec;
  auto named = to_named(init_encoder_params(spec, rng));
  named.erase(named.begin());
  CHECK_THROWS_AS(from_named(spec, named), ParseError);
}

TEST_CASE("positions csv") {
  std::stringstream in("g0m0,g0m1,g1m0,g1m1\n1,2,3,4\n5,6,7,8\n");
  const PositionBatch x = read_positions_csv(in);
  CHECK(x.count() == 2);
  CHECK(x.groups() == 2);
  CHECK(x.coords() == 2);
  CHECK(x.values().at(1, 1, 0) == 7.0);
  std::stringstream out;
  write_positions_csv(out, x);
  CHECK(out.str() == "g0m0,g0m1,g1m0,g1m1\n1,2,3,4\n5,6,7,8\n");

  std::stringstream bad("g0m0,g0m1\n1,2\n3\n");
  try {
    (void)read_positions_csv(bad);
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::stringstream nan("g0m0\nabc\n");
  CHECK_THROWS_AS(read_positions_csv(nan), ParseError);
}

TEST_CASE("format_number round-trips") {
  SeededRng rng(14);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal(0.0, 1e3);
    CHECK(std::stod(format_number(v)) == v);
  }
}
