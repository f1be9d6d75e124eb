#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lffpe/heatmap_io.hpp"
#include "lffpe/kernels.hpp"
#include "lffpe/presets.hpp"

using namespace lffpe;

namespace {

EncoderSpec fourier_spec(std::size_t f, double gamma) {
  FourierPEConfig c;
  c.fourier_dim = f;
  c.hidden_dim = 8;
  c.encoding_dim = 8;
  c.coords_per_group = 2;
  c.gamma = gamma;
  return FourierMlp{c};
}

} // namespace

TEST_CASE("gaussian_kernel examples") {
  const double x[] = {1.0, 2.0}, y[] = {4.0, 6.0};
  CHECK(gaussian_kernel(x, x, 3.0) == 1.0);
  // |x - y| = 5 = gamma gives e^-1.
  CHECK(std::abs(gaussian_kernel(x, y, 5.0) - 0.367879) < 1e-6);
  CHECK(gaussian_kernel(x, y, 2.0) == gaussian_kernel(y, x, 2.0));
}

TEST_CASE("shift_fn examples") {
  SeededRng rng(1);
  const Tensor w_r = sample(rng, NormalDist{}, {16, 2});
  const double zero[] = {0.0, 0.0};
  CHECK(shift_fn(zero, w_r) == 0.5);
  const double a[] = {0.3, -1.1}, b[] = {2.0, 0.4};
  const double d[] = {a[0] - b[0], a[1] - b[1]}, nd[] = {-d[0], -d[1]};
  Tensor both({2, 1, 2}, std::vector<double>{a[0], a[1], b[0], b[1]});
  const Tensor ff = fourier_features(PositionBatch(both), w_r);
  CHECK(std::abs(shift_fn(d, w_r) - dot(ff.row(0), ff.row(1))) < 1e-12);
  CHECK(shift_fn(nd, w_r) == doctest::Approx(shift_fn(d, w_r)).epsilon(1e-15));
}

TEST_CASE("expected_fourier_kernel is half a Gaussian with bandwidth sqrt(2) gamma") {
  CHECK(expected_fourier_kernel(0.0, 3.0) == 0.5);
  CHECK(expected_fourier_kernel(3.0, 3.0) == doctest::Approx(0.5 * std::exp(-0.5)));
}

TEST_CASE("heatmap self-similarity and anchor maximum") {
  SeededRng rng(2);
  const EncoderSpec spec = fourier_spec(4096, 8.0);
  const EncoderParams params = init_encoder_params(spec, rng);
  const HeatmapGrid h = similarity_heatmap(spec, params, 64, 64, {31, 31}, Stage::Fourier);
  CHECK(h.at(31, 31) == doctest::Approx(0.5).epsilon(1e-14));
  double best = -1.0;
  for (double v : h.values.data())
    best = std::max(best, v);
  CHECK(best == h.at(31, 31));
  CHECK_THROWS_AS(similarity_heatmap(spec, params, 64, 64, {64, 0}, Stage::Fourier),
                  std::out_of_range);
}

TEST_CASE("Fourier heatmap decays along rays (averaged over seeds)") {
  const EncoderSpec spec = fourier_spec(1024, 8.0);
  std::vector<HeatmapGrid> maps;
  for (std::uint64_t s = 0; s < 20; ++s) {
    SeededRng rng(100 + s);
    maps.push_back(similarity_heatmap(spec, init_encoder_params(spec, rng), 64, 64, {31, 31},
                                      Stage::Fourier));
  }
  const HeatmapGrid h = average(maps);
  const double tol = 0.01; // Monte-Carlo noise
  for (int dr : {-1, 0, 1})
    for (int dc : {-1, 0, 1}) {
      if (dr == 0 && dc == 0)
        continue;
      for (int k = 1; k < 20; ++k) {
        const double a = h.at(31 + dr * (k - 1), 31 + dc * (k - 1));
        const double b = h.at(31 + dr * k, 31 + dc * k);
        CHECK(b <= a + tol);
      }
    }
}

TEST_CASE("sine-concat heatmap is cross shaped") {
  const EncoderSpec spec = find_preset("sine-2d").spec;
  const HeatmapGrid h = similarity_heatmap(spec, std::monostate{}, 64, 64, {31, 31}, Stage::Full);
  // Closed form: each block contributes sum_d cos(delta * w_d); an axis
  // offset keeps one block at its maximum D/4.
  CHECK(h.at(31, 39) > h.at(37, 37));
  // Oracle computed independently (numpy, raw integer coordinates, D = 768,
  // radius 8, bilinear diagonal samples): 1.16805.
  CHECK(anisotropy_ratio(h, 8.0) == doctest::Approx(1.16805).epsilon(1e-4));
}

TEST_CASE("anisotropy_ratio of an isotropic synthetic map is 1") {
  HeatmapGrid h{33, 33, {16, 16}, Tensor({33, 33})};
  for (std::size_t r = 0; r < 33; ++r)
    for (std::size_t c = 0; c < 33; ++c) {
      const double dr = static_cast<double>(r) - 16.0, dc = static_cast<double>(c) - 16.0;
      h.values.at(r, c) = 10.0 - 0.1 * (dr * dr + dc * dc);
    }
  // Radius 5 sqrt 2 puts the diagonal samples on lattice points; the axis
  // samples are interpolated, which costs at most 0.025 on a value of 5.
  CHECK(anisotropy_ratio(h, 5.0 * std::sqrt(2.0)) == doctest::Approx(1.0).epsilon(0.02));
  HeatmapGrid flat{9, 9, {4, 4}, Tensor({9, 9}, 2.0)};
  CHECK(anisotropy_ratio(flat, 3.0) == 1.0);
}

TEST_CASE("default anchors") {
  const auto a = default_anchors(64, 64);
  CHECK(a[0].name == "top-left");
  CHECK(a[0].cell == GridCell{4, 4});
  CHECK(a[1].cell == GridCell{4, 57});
  CHECK(a[2].cell == GridCell{31, 31});
  CHECK(a[3].cell == GridCell{57, 4});
  CHECK(a[4].cell == GridCell{57, 57});
}

TEST_CASE("full-stage heatmap of a preset encoder") {
  SeededRng rng(3);
  const EncoderSpec spec = find_preset("reformer-s41").spec;
  const EncoderParams params = init_encoder_params(spec, rng);
  const HeatmapGrid h = similarity_heatmap(spec, params, 8, 8, {3, 3}, Stage::Full);
  CHECK(h.values.shape() == Shape{8, 8});
  CHECK(h.values.all_finite());
  CHECK_THROWS(similarity_heatmap(find_preset("sine-2d").spec, std::monostate{}, 8, 8, {1, 1},
                                  Stage::Fourier));
}

TEST_CASE("pgm and csv output") {
  HeatmapGrid h{2, 3, {0, 0}, Tensor::matrix({{0.0, 0.5, 1.0}, {0.25, 0.75, 1.0}})};
  std::stringstream pgm;
  const PgmScaling s = write_pgm(pgm, h);
  CHECK(s.min == 0.0);
  CHECK(s.max == 1.0);
  CHECK(pgm.str() == "P2\n3 2\n255\n0 128 255\n64 191 255\n");
  std::stringstream csv;
  write_heatmap_csv(csv, h);
  CHECK(csv.str() == "0,0.5,1\n0.25,0.75,1\n");
  std::stringstream meta;
  write_pgm_meta(meta, s, {{"anisotropy_ratio", "1.2"}});
  CHECK(meta.str().find("anisotropy_ratio=1.2") != std::string::npos);
  CHECK(meta.str().find("min=0") != std::string::npos);

  HeatmapGrid flat{1, 2, {0, 0}, Tensor({1, 2}, 3.0)};
  std::stringstream fp;
  write_pgm(fp, flat);
  CHECK(fp.str() == "P2\n2 1\n255\n0 0\n");
}
