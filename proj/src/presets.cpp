#include "lffpe/presets.hpp"

#include <stdexcept>

namespace lffpe {

namespace {

FourierPEConfig fourier(std::size_t f, std::size_t h, std::size_t d, std::size_t g, std::size_t m,
                        double gamma) {
  FourierPEConfig c;
  c.fourier_dim = f;
  c.hidden_dim = h;
  c.encoding_dim = d;
  c.groups = g;
  c.coords_per_group = m;
  c.gamma = gamma;
  return c;
}

FourierPEConfig with_ln(FourierPEConfig c) {
  c.layer_norm = true;
  return c;
}

FourierPEConfig with_dropout(FourierPEConfig c, double p) {
  c.dropout = p;
  return c;
}

FourierPEConfig fixed(FourierPEConfig c) {
  c.trainable_fourier = false;
  return c;
}

FourierPEConfig features(FourierPEConfig c, FeatureMap f) {
  c.features = f;
  c.trainable_fourier = false; // no W_r to train
  if (f == FeatureMap::Raw)
    c.fourier_dim = 0;
  return c;
}

// Retrieval toy: 2-D integer positions on a 12x12 grid, D = content width.
constexpr std::size_t kToyDim = 32;
constexpr double kToyGamma = 4.0;

std::vector<Preset> build() {
  std::vector<Preset> p;
  p.push_back({"reformer-s41", FourierMlp{with_ln(fourier(384, 32, 768, 1, 2, 1.0))},
               "Section 4.1: |F|=384, |H|=32, D=768, gamma=1, 2-D pixel positions, layer norm on"});
  p.push_back({"reformer-apxD", FourierMlp{with_ln(fourier(768, 32, 768, 1, 2, 1.0))},
               "Appendix D: |F|=768 for Fourier methods in the same experiment; conflicts with "
               "the |F|=384 of Section 4.1 (see reformer-s41)"});
  p.push_back({"detr", FourierMlp{fourier(256, 256, 256, 1, 2, 1.0)},
               "Appendix D: MLP 2x256 with GeLU, gamma=1.0, D=256; |F| not stated, 256 chosen; "
               "positions normalized to (0,1)"});
  p.push_back({"widget-1-4", FourierMlp{with_dropout(fourier(128, 32, 128, 1, 4, 100.0), 0.2)},
               "Section 4.4 / Appendix D: |F|=128, G=1, M=4, gamma=100, dropout 0.2; |H| and D "
               "not stated, 32 and 128 chosen"});
  p.push_back({"widget-2-2", FourierMlp{with_dropout(fourier(64, 32, 128, 2, 2, 100.0), 0.2)},
               "Section 4.4 / Appendix D: |F|=64, G=2, M=2, gamma=100, dropout 0.2; |H| and D "
               "not stated, 32 and 128 chosen"});
  p.push_back({"widget-4-1", FourierMlp{with_dropout(fourier(32, 32, 128, 4, 1, 100.0), 0.2)},
               "Section 4.4 / Appendix D: |F|=32, G=4, M=1, gamma=100, dropout 0.2; |H| and D "
               "not stated, 32 and 128 chosen"});
  p.push_back({"embed-2d", EmbedND{2, {64, 64}, {384, 384}, {}, OutOfRange::Error},
               "Section 4.1: vertical [64, 384] and horizontal [64, 384] tables, concatenated"});
  p.push_back({"embed-1d", EmbedND{2, {4096}, {768}, {64, 64}, OutOfRange::Error},
               "Section 4.1: one [64x64, 768] table over raster-flattened positions"});
  p.push_back({"sine-2d", SineConcat{2, 768, kSineBase, 1.0},
               "Section 2.2 / 4.1: Sine-1D of each coordinate, concatenated, D=768"});
  p.push_back({"sine-1d", Sine1D{2, 768, kSineBase, 1.0, {64, 64}},
               "Section 4.1: Sine-1D over raster-flattened 64x64 positions, D=768"});
  p.push_back({"md-sine", MdSine{768, {10000.0, 5000.0}, 1.0},
               "Appendix C: coordinates combined inside the sinusoid with bases 10000 and 5000"});
  p.push_back({"mlp", FourierMlp{with_ln(features(fourier(384, 32, 768, 1, 2, 1.0), FeatureMap::Raw))},
               "Section 4.1: MLP-only baseline, raw coordinates into the same MLP as reformer-s41"});
  p.push_back({"fixed-fourier", FourierMlp{with_ln(fixed(fourier(384, 32, 768, 1, 2, 1.0)))},
               "Section 4.4: reformer-s41 with W_r frozen at initialization"});
  p.push_back({"none", NoEncoding{2, 768}, "Section 4.3: no positional encoding (zero vector)"});

  p.push_back({"toy-learnable-fourier", FourierMlp{fourier(64, 32, kToyDim, 1, 2, kToyGamma)},
               "retrieval toy: learnable Fourier + MLP on integer 2-D positions"});
  p.push_back({"toy-fixed-fourier", FourierMlp{fixed(fourier(64, 32, kToyDim, 1, 2, kToyGamma))},
               "retrieval toy: toy-learnable-fourier with W_r frozen"});
  p.push_back({"toy-mlp", FourierMlp{features(fourier(64, 32, kToyDim, 1, 2, kToyGamma), FeatureMap::Raw)},
               "retrieval toy: raw coordinates into the MLP"});
  p.push_back({"toy-embed", EmbedND{2, {12, 12}, {16, 16}, {}, OutOfRange::Error},
               "retrieval toy: one table per coordinate covering the 12x12 grid"});
  p.push_back({"toy-sine", SineConcat{2, kToyDim, kSineBase, 1.0},
               "retrieval toy: Sine-2D"});
  p.push_back({"toy-none", NoEncoding{2, kToyDim}, "retrieval toy: zero positional encoding"});
  return p;
}

} // namespace

const std::vector<Preset> &all_presets() {
  static const std::vector<Preset> presets = build();
  return presets;
}

const Preset &find_preset(std::string_view name) {
  std::string names;
  for (const auto &p : all_presets()) {
    if (p.name == name)
      return p;
    names += (names.empty() ? "" : ", ") + p.name;
  }
  throw std::invalid_argument("unknown preset '" + std::string(name) + "' (available: " + names +
                              ")");
}

} // namespace lffpe
