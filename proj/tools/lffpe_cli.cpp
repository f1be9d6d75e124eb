// Command-line front end: encode, heatmap, verify, train, presets.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lffpe/heatmap_io.hpp"
#include "lffpe/kernel_fit.hpp"
#include "lffpe/kernels.hpp"
#include "lffpe/presets.hpp"
#include "lffpe/retrieval.hpp"
#include "lffpe/serialization.hpp"
#include "lffpe/verify.hpp"

namespace fs = std::filesystem;
using namespace lffpe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

/// Bad input or configuration; reported with exit status 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string preset;
  std::string out_dir;
};

/// The encoder chosen by --config or --preset (exactly one).
EncoderSpec resolve_spec(const Globals &g) {
  if (!g.config.empty() && !g.preset.empty())
    throw UsageError("give either --config or --preset, not both");
  if (!g.config.empty())
    return parse_spec(read_text_file(g.config));
  if (!g.preset.empty())
    return find_preset(g.preset).spec;
  throw UsageError("an encoder is required: pass --config <path> or --preset <name>");
}

fs::path output_dir(const Globals &g) {
  const fs::path dir = g.out_dir.empty() ? fs::path(".") : fs::path(g.out_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------- encode

struct EncodeArgs {
  std::string input;
  std::string checkpoint;
  std::string output;
  std::vector<double> normalize;
};

int cmd_encode(const Globals &g, const EncodeArgs &a) {
  std::ifstream in(a.input);
  if (!in)
    throw UsageError("cannot read positions file " + a.input);
  PositionBatch x = read_positions_csv(in);
  if (!a.normalize.empty())
    x = x.normalized(a.normalize);

  EncoderSpec spec;
  EncoderParams params;
  if (!a.checkpoint.empty()) {
    if (!g.config.empty() || !g.preset.empty())
      throw UsageError("--checkpoint carries its own encoder; drop --config/--preset");
    std::tie(spec, params) = load_checkpoint(a.checkpoint);
  } else {
    spec = resolve_spec(g);
    SeededRng rng(g.seed);
    params = init_encoder_params(spec, rng);
  }
  const Tensor y = encode_positions(spec, params, x);

  if (a.output.empty() && g.out_dir.empty()) {
    write_matrix_csv(std::cout, y, "d");
  } else {
    const fs::path path = a.output.empty() ? output_dir(g) / "encodings.csv" : fs::path(a.output);
    auto out = open_out(path);
    write_matrix_csv(out, y, "d");
  }
  return kExitOk;
}

// --------------------------------------------------------------- heatmap

struct HeatmapArgs {
  std::size_t height = 64;
  std::size_t width = 64;
  std::vector<std::string> anchors;
  std::string stage = "fourier";
  std::size_t seeds = 1;
  bool normalize = false;
  double radius = 8.0;
  std::string prefix = "heatmap";
  std::string checkpoint;
};

NamedAnchor parse_anchor(const std::string &text, std::size_t height, std::size_t width,
                         std::vector<std::string> &names) {
  for (const auto &a : default_anchors(height, width))
    if (a.name == text)
      return a;
  const auto comma = text.find(',');
  if (comma == std::string::npos)
    throw UsageError("anchor '" + text + "' is neither a default name nor 'row,col'");
  std::size_t row = 0, col = 0;
  try {
    std::size_t used = 0;
    row = std::stoul(text.substr(0, comma), &used);
    if (used != comma)
      throw std::invalid_argument("row");
    col = std::stoul(text.substr(comma + 1), &used);
    if (used != text.size() - comma - 1)
      throw std::invalid_argument("col");
  } catch (const std::exception &) {
    throw UsageError("anchor '" + text + "' is not 'row,col'");
  }
  if (row >= height || col >= width)
    throw UsageError("anchor " + text + " lies outside the " + std::to_string(height) + "x" +
                     std::to_string(width) + " grid");
  names.push_back("r" + std::to_string(row) + "c" + std::to_string(col));
  return {names.back(), {row, col}};
}

int cmd_heatmap(const Globals &g, const HeatmapArgs &a) {
  if (a.height == 0 || a.width == 0)
    throw UsageError("grid extents must be positive");
  if (a.seeds == 0)
    throw UsageError("--seeds must be positive");
  const Stage stage = parse_stage(a.stage);

  EncoderSpec spec;
  std::vector<EncoderParams> params;
  if (!a.checkpoint.empty()) {
    if (a.seeds != 1)
      throw UsageError("a checkpoint has one set of parameters; --seeds must be 1");
    auto loaded = load_checkpoint(a.checkpoint);
    spec = loaded.first;
    params.push_back(std::move(loaded.second));
  } else {
    spec = resolve_spec(g);
    const SeededRng root(g.seed);
    for (std::size_t s = 0; s < a.seeds; ++s) {
      SeededRng rng = root.split(s);
      params.push_back(init_encoder_params(spec, rng));
    }
  }

  std::vector<std::string> custom_names;
  custom_names.reserve(a.anchors.size());
  std::vector<NamedAnchor> anchors;
  if (a.anchors.empty()) {
    for (const auto &n : default_anchors(a.height, a.width))
      anchors.push_back(n);
  } else {
    for (const auto &text : a.anchors)
      anchors.push_back(parse_anchor(text, a.height, a.width, custom_names));
  }

  GridOptions opts;
  opts.normalize = a.normalize;
  const fs::path dir = output_dir(g);
  for (const auto &anchor : anchors) {
    std::vector<HeatmapGrid> maps;
    for (const auto &p : params)
      maps.push_back(similarity_heatmap(spec, p, a.height, a.width, anchor.cell, stage, opts));
    const HeatmapGrid h = average(maps);

    const std::string stem = a.prefix + "_" + std::string(anchor.name);
    PgmScaling scaling;
    {
      auto out = open_out(dir / (stem + ".pgm"));
      scaling = write_pgm(out, h);
    }
    {
      auto out = open_out(dir / (stem + ".csv"));
      write_heatmap_csv(out, h);
    }
    std::vector<std::pair<std::string, std::string>> extra{
        {"anchor", std::to_string(anchor.cell.row) + "," + std::to_string(anchor.cell.col)},
        {"stage", std::string(to_string(stage))},
        {"seeds", std::to_string(params.size())},
        {"encoder", std::string(kind_name(kind_of(spec)))},
    };
    try {
      extra.emplace_back("anisotropy_radius", format_number(a.radius));
      extra.emplace_back("anisotropy_ratio", format_number(anisotropy_ratio(h, a.radius)));
    } catch (const std::exception &) {
      extra.back() = {"anisotropy_ratio", "undefined"};
    }
    auto meta = open_out(dir / (stem + ".meta"));
    write_pgm_meta(meta, scaling, extra);
    std::cout << "wrote " << (dir / (stem + ".pgm")).string() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const Globals &g, const std::string &suite) {
  const auto results = run_suite(suite, g.seed);
  write_report(std::cout, results);
  return all_passed(results) ? kExitOk : kExitCheckFailed;
}

// ----------------------------------------------------------------- train

struct TrainArgs {
  std::string task;
  std::size_t steps = 0; // 0: task default
  double lr = 0.0;       // 0: task default
  // kernel-fit
  std::string stage = "full";
  std::size_t pairs = 256;
  double extent = 8.0;
  double target_gamma = 0.0; // 0: twice the encoder's gamma
  double kl_alpha = 0.0;
  double w_r_offset = 0.0;
  // retrieval
  std::vector<std::string> encoders;
  std::size_t seed_count = 1;
  std::size_t train_instances = 0;
  std::size_t test_instances = 0;
};

int train_kernel_fit(const Globals &g, const TrainArgs &a) {
  const EncoderSpec spec = resolve_spec(g);
  const auto *fm = std::get_if<FourierMlp>(&spec);
  if (!fm)
    throw UsageError("kernel-fit needs a Fourier/MLP encoder, got " +
                     std::string(kind_name(kind_of(spec))));
  const FourierPEConfig &config = fm->config;
  const double target_gamma = a.target_gamma > 0.0 ? a.target_gamma : 2.0 * config.gamma;

  SeededRng root(g.seed);
  SeededRng init_rng = root.split(1);
  SeededRng pair_rng = root.split(2);
  SeededRng dropout_rng = root.split(3);
  FourierPEParams params = init_params(config, init_rng);
  if (a.w_r_offset != 0.0) {
    if (params.w_r.empty())
      throw UsageError("--w-r-offset needs Fourier features");
    for (auto &v : params.w_r.data())
      v += a.w_r_offset;
  }
  const PairSet pairs = sample_pairs(a.pairs, config.groups, config.coords_per_group, a.extent,
                                     pair_rng);
  KernelFitOptions opts;
  opts.steps = a.steps > 0 ? a.steps : 2000;
  if (a.lr > 0.0)
    opts.adam.lr = a.lr;
  opts.stage = parse_stage(a.stage);
  if (a.kl_alpha > 0.0)
    opts.kl = KlRegConfig::from_gamma(a.kl_alpha, config.gamma);

  const auto target = [target_gamma](std::span<const double> x, std::span<const double> y) {
    return gaussian_kernel(x, y, target_gamma);
  };
  const KernelFitResult r = fit_kernel_target(config, std::move(params), target, pairs, opts,
                                              dropout_rng);

  const fs::path dir = output_dir(g);
  {
    auto out = open_out(dir / "loss_trace.csv");
    out << "step,model_loss,kl_loss,total_loss\n";
    for (const auto &rec : r.trace)
      out << rec.step << ',' << format_number(rec.model_loss) << ','
          << format_number(rec.kl_loss) << ',' << format_number(rec.total_loss) << '\n';
  }
  std::vector<NamedTensor> extra;
  if (r.log_target_variance)
    extra.emplace_back("log_target_variance", Tensor({1}, *r.log_target_variance));
  save_checkpoint((dir / "checkpoint.lfpe").string(), spec, EncoderParams{r.params}, extra);
  {
    auto out = open_out(dir / "metrics.csv");
    out << "metric,value\n"
        << "initial_loss," << format_number(r.initial_loss()) << '\n'
        << "final_loss," << format_number(r.final_loss()) << '\n'
        << "loss_ratio," << format_number(r.final_loss() / r.initial_loss()) << '\n'
        << "target_gamma," << format_number(target_gamma) << '\n'
        << "steps," << opts.steps << '\n';
  }
  std::cout << "kernel-fit initial_loss=" << format_number(r.initial_loss())
            << " final_loss=" << format_number(r.final_loss()) << '\n';
  return kExitOk;
}

int train_retrieval(const Globals &g, const TrainArgs &a) {
  if (!g.config.empty())
    throw UsageError("retrieval compares presets; use --encoders or --preset");
  std::vector<std::string> encoders = a.encoders;
  if (encoders.empty()) {
    if (!g.preset.empty())
      encoders.push_back(g.preset);
    else
      encoders = {"toy-learnable-fourier", "toy-embed", "toy-none"};
  }
  if (a.seed_count == 0)
    throw UsageError("--seeds must be positive");
  for (const auto &name : encoders)
    (void)find_preset(name);

  TrainOptions opts;
  if (a.steps > 0)
    opts.steps = a.steps;
  if (a.lr > 0.0)
    opts.adam.lr = a.lr;

  const fs::path dir = output_dir(g);
  auto results = open_out(dir / "results.csv");
  results << "encoder,seed,seen_acc,unseen_acc,unseen_failures\n";
  auto trace = open_out(dir / "loss_trace.csv");
  trace << "encoder,seed,step,loss\n";

  const SeededRng root(g.seed);
  for (std::size_t s = 0; s < a.seed_count; ++s) {
    RetrievalTask task;
    task.seed = root.split(2 * s).next_u64();
    if (a.train_instances > 0)
      task.train_instances = a.train_instances;
    if (a.test_instances > 0)
      task.test_instances = a.test_instances;
    for (const auto &name : encoders) {
      // Every encoder sees the same data and the same model-init stream.
      SeededRng rng = root.split(2 * s + 1);
      const RetrievalResult r = train_and_eval(find_preset(name).spec, task, opts, rng);
      results << name << ',' << s << ',' << format_number(r.seen_accuracy) << ','
              << format_number(r.unseen_accuracy) << ',' << r.unseen_failures << '\n';
      for (std::size_t step = 0; step < r.loss_trace.size(); ++step)
        trace << name << ',' << s << ',' << step << ',' << format_number(r.loss_trace[step]) << '\n';
      save_checkpoint((dir / ("checkpoint_" + name + "_seed" + std::to_string(s) + ".lfpe")).string(),
                      r.model.spec, r.model.encoder);
      std::cout << "retrieval encoder=" << name << " seed=" << s
                << " seen_acc=" << format_number(r.seen_accuracy)
                << " unseen_acc=" << format_number(r.unseen_accuracy) << '\n';
    }
  }
  return kExitOk;
}

int cmd_train(const Globals &g, const TrainArgs &a) {
  if (a.task == "kernel-fit")
    return train_kernel_fit(g, a);
  if (a.task == "retrieval")
    return train_retrieval(g, a);
  throw UsageError("unknown task '" + a.task + "' (expected kernel-fit or retrieval)");
}

// --------------------------------------------------------------- presets

int cmd_presets(const Globals &g) {
  if (!g.preset.empty()) {
    const Preset &p = find_preset(g.preset);
    std::cout << "# " << p.name << ": " << p.provenance << '\n' << serialize_spec(p.spec);
    return kExitOk;
  }
  std::cout << "name,kind,encoding_dim,provenance\n";
  for (const auto &p : all_presets())
    std::cout << p.name << ',' << kind_name(kind_of(p.spec)) << ',' << output_dim(p.spec) << ",\""
              << p.provenance << "\"\n";
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Learnable Fourier feature positional encodings"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--config", g.config, "Encoder config file (key=value)");
  app.add_option("--preset", g.preset, "Named encoder preset (see `presets`)");
  app.add_option("--out", g.out_dir, "Output directory");

  EncodeArgs enc;
  auto *encode = app.add_subcommand("encode", "Encode a CSV of positions");
  encode->fallthrough();
  encode->add_option("input", enc.input, "Positions CSV (header g0m0,g0m1,...)")->required();
  encode->add_option("--checkpoint", enc.checkpoint, "Parameters (and encoder) to use");
  encode->add_option("-o,--output", enc.output, "Output CSV (default stdout, or <out>/encodings.csv)");
  encode->add_option("--normalize", enc.normalize,
                     "Extents: map v to (v + 0.5) / extent before encoding")
      ->delimiter(',');

  HeatmapArgs hm;
  auto *heatmap = app.add_subcommand("heatmap", "Positional similarity heatmaps (PGM + CSV)");
  heatmap->fallthrough();
  heatmap->add_option("--height", hm.height, "Grid rows")->capture_default_str();
  heatmap->add_option("--width", hm.width, "Grid columns")->capture_default_str();
  heatmap->add_option("--anchor", hm.anchors,
                      "Anchor: top-left|top-right|center|bottom-left|bottom-right or row,col "
                      "(repeatable; default all five names)");
  heatmap->add_option("--stage", hm.stage, "fourier or full")->capture_default_str();
  heatmap->add_option("--seeds", hm.seeds, "Average over this many initializations")
      ->capture_default_str();
  heatmap->add_flag("--normalize", hm.normalize, "Cells at ((i + 0.5) / H, (j + 0.5) / W)");
  heatmap->add_option("--radius", hm.radius, "Radius for the anisotropy ratio")
      ->capture_default_str();
  heatmap->add_option("--prefix", hm.prefix, "Output file prefix")->capture_default_str();
  heatmap->add_option("--checkpoint", hm.checkpoint, "Use trained parameters");

  std::string suite;
  auto *verify = app.add_subcommand("verify", "Run invariant suites");
  verify->fallthrough();
  verify->add_option("suite", suite, "shift, kernel, grad or all")
      ->required()
      ->check(CLI::IsMember({"shift", "kernel", "grad", "all"}));

  TrainArgs tr;
  auto *train = app.add_subcommand("train", "Toy training runs");
  train->fallthrough();
  train->add_option("task", tr.task, "kernel-fit or retrieval")
      ->required()
      ->check(CLI::IsMember({"kernel-fit", "retrieval"}));
  train->add_option("--steps", tr.steps, "Optimizer steps (default: 2000 kernel-fit, 5000 retrieval)");
  train->add_option("--lr", tr.lr, "Adam learning rate");
  train->add_option("--stage", tr.stage, "kernel-fit: fourier or full")->capture_default_str();
  train->add_option("--pairs", tr.pairs, "kernel-fit: position pairs")->capture_default_str();
  train->add_option("--extent", tr.extent, "kernel-fit: coordinates uniform in [0, extent)")
      ->capture_default_str();
  train->add_option("--target-gamma", tr.target_gamma,
                    "kernel-fit: Gaussian target bandwidth (default 2 gamma)");
  train->add_option("--kl-alpha", tr.kl_alpha, "kernel-fit: KL regularizer weight (0: off)")
      ->capture_default_str();
  train->add_option("--w-r-offset", tr.w_r_offset,
                    "kernel-fit: add this to every initial W_r entry (asymmetric start)");
  train->add_option("--encoders", tr.encoders, "retrieval: presets to compare")->delimiter(',');
  train->add_option("--seeds", tr.seed_count, "retrieval: paired seeds")->capture_default_str();
  train->add_option("--train-instances", tr.train_instances, "retrieval: training instances");
  train->add_option("--test-instances", tr.test_instances, "retrieval: test instances per split");

  auto *presets = app.add_subcommand("presets", "List presets, or print one with --preset");
  presets->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*encode)
      return cmd_encode(g, enc);
    if (*heatmap)
      return cmd_heatmap(g, hm);
    if (*verify)
      return cmd_verify(g, suite);
    if (*train)
      return cmd_train(g, tr);
    return cmd_presets(g);
  } catch (const DivergenceError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const ParseError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception &e) {
    // Configuration, shape and range problems all trace back to the input.
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
