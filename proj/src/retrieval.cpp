#include "lffpe/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "lffpe/kernel_fit.hpp"
#include "lffpe/ops.hpp"
#include "lffpe/serialization.hpp"

namespace lffpe {

bool CoordinateBand::contains(double row, double col) const {
  const double v = axis == 0 ? row : col;
  return v >= static_cast<double>(lo) && v < static_cast<double>(hi);
}

void RetrievalTask::validate() const {
  if (grid_height == 0 || grid_width == 0)
    throw std::invalid_argument("retrieval grid must be nonempty");
  if (holdout.axis > 1)
    throw std::invalid_argument("held-out band axis must be 0 or 1");
  const std::size_t extent = holdout.axis == 0 ? grid_height : grid_width;
  if (holdout.lo >= holdout.hi || holdout.hi > extent)
    throw std::invalid_argument("held-out band must be a nonempty range inside the grid");
  if (holdout.hi - holdout.lo == extent)
    throw std::invalid_argument("held-out band leaves no training region");
  if (items == 0)
    throw std::invalid_argument("retrieval needs at least one item");
  if (content_dim < items + 1)
    throw std::invalid_argument("content_dim must fit one slot marker per token");
  if (train_instances == 0 || test_instances == 0)
    throw std::invalid_argument("retrieval needs training and test instances");
}

std::size_t nearest_item(const Tensor &positions) {
  const std::size_t items = positions.dim(0) - 1;
  std::size_t best = 0;
  double best_d = 0.0;
  for (std::size_t i = 0; i < items; ++i) {
    const double dr = positions.at(i + 1, 0) - positions.at(0, 0);
    const double dc = positions.at(i + 1, 1) - positions.at(0, 1);
    const double d = dr * dr + dc * dc;
    if (i == 0 || d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

namespace {

using Cell = std::pair<std::size_t, std::size_t>;

std::vector<Cell> cells_where(const RetrievalTask &task, bool in_band) {
  std::vector<Cell> out;
  for (std::size_t r = 0; r < task.grid_height; ++r)
    for (std::size_t c = 0; c < task.grid_width; ++c)
      if (task.holdout.contains(static_cast<double>(r), static_cast<double>(c)) == in_band)
        out.emplace_back(r, c);
  return out;
}

/// `count` distinct cells from `pool`, excluding `taken`.
void draw_distinct(const std::vector<Cell> &pool, std::size_t count, std::vector<Cell> &taken,
                   SeededRng &rng) {
  while (count > 0) {
    const Cell c = pool[rng.below(pool.size())];
    if (std::find(taken.begin(), taken.end(), c) != taken.end())
      continue;
    taken.push_back(c);
    --count;
  }
}

RetrievalInstance make_instance(const RetrievalTask &task, const std::vector<Cell> &query_pool,
                                const std::vector<Cell> &item_pool, bool unseen, SeededRng &rng) {
  std::vector<Cell> cells;
  draw_distinct(query_pool, 1, cells, rng);
  draw_distinct(item_pool, task.items, cells, rng);

  RetrievalInstance inst;
  inst.unseen = unseen;
  inst.positions = Tensor({task.items + 1, 2});
  for (std::size_t t = 0; t <= task.items; ++t) {
    inst.positions.at(t, 0) = static_cast<double>(cells[t].first);
    inst.positions.at(t, 1) = static_cast<double>(cells[t].second);
  }
  inst.content = sample(rng, NormalDist{0.0, task.content_noise}, {task.items + 1, task.content_dim});
  for (std::size_t t = 0; t <= task.items; ++t) {
    for (std::size_t j = 0; j <= task.items; ++j)
      inst.content.at(t, j) = 0.0;
    // Items carry their slot marker; the query carries the last marker.
    inst.content.at(t, t == 0 ? task.items : t - 1) = 1.0;
  }
  inst.label = nearest_item(inst.positions);
  return inst;
}

} // namespace

RetrievalDataset generate_retrieval_task(const RetrievalTask &task, SeededRng &rng) {
  task.validate();
  const auto seen_cells = cells_where(task, false);
  const auto band_cells = cells_where(task, true);
  std::vector<Cell> all_cells = seen_cells;
  all_cells.insert(all_cells.end(), band_cells.begin(), band_cells.end());
  if (seen_cells.size() < task.items + 1)
    throw std::invalid_argument("training region has fewer distinct cells than tokens per instance");

  RetrievalDataset data;
  for (std::size_t i = 0; i < task.train_instances; ++i)
    data.train.push_back(make_instance(task, seen_cells, seen_cells, false, rng));
  for (std::size_t i = 0; i < task.test_instances; ++i)
    data.test_seen.push_back(make_instance(task, seen_cells, seen_cells, false, rng));
  for (std::size_t i = 0; i < task.test_instances; ++i)
    data.test_unseen.push_back(make_instance(task, band_cells, all_cells, true, rng));
  return data;
}

void write_dataset_csv(std::ostream &out, const RetrievalDataset &data) {
  const std::size_t width = data.train.empty() ? 0 : data.train.front().content.dim(1);
  out << "split,instance,token,row,col,label";
  for (std::size_t j = 0; j < width; ++j)
    out << ",c" << j;
  out << '\n';
  auto dump = [&](const char *split, const std::vector<RetrievalInstance> &xs) {
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t t = 0; t < xs[i].positions.dim(0); ++t) {
        out << split << ',' << i << ',' << (t == 0 ? "query" : "item" + std::to_string(t - 1))
            << ',' << format_number(xs[i].positions.at(t, 0)) << ','
            << format_number(xs[i].positions.at(t, 1)) << ',' << xs[i].label;
        for (double v : xs[i].content.row(t))
          out << ',' << format_number(v);
        out << '\n';
      }
  };
  dump("train", data.train);
  dump("test_seen", data.test_seen);
  dump("test_unseen", data.test_unseen);
}

namespace {

/// Forward/backward of any encoder over a batch of positions, with the
/// gradients of its trainable tensors.
class EncoderRunner {
public:
  EncoderRunner(const EncoderSpec &spec, EncoderParams &params) : spec_(spec), params_(params) {
    if (const auto *f = std::get_if<FourierMlp>(&spec_))
      fourier_grads_ = GradientStore::zeros_like(std::get<FourierPEParams>(params_), f->config);
    if (auto *t = std::get_if<EmbedTable>(&params_))
      for (const auto &tab : t->tables)
        table_grads_.emplace_back(tab.shape());
  }

  Tensor forward(const PositionBatch &x, Mode mode, SeededRng *rng) {
    batch_ = x;
    if (const auto *f = std::get_if<FourierMlp>(&spec_)) {
      grouped_ = regroup(x, f->config.groups, f->config.coords_per_group);
      return encode(*grouped_, std::get<FourierPEParams>(params_), f->config, mode, rng, &cache_);
    }
    return encode_positions(spec_, params_, x, mode, rng);
  }

  void backward(const Tensor &d_pe) {
    if (const auto *f = std::get_if<FourierMlp>(&spec_)) {
      fourier_grads_ = backward_encode(*grouped_, std::get<FourierPEParams>(params_), f->config,
                                       d_pe, &cache_);
    } else if (const auto *e = std::get_if<EmbedND>(&spec_)) {
      const auto &table = std::get<EmbedTable>(params_);
      for (auto &g : table_grads_)
        for (auto &v : g.data())
          v = 0.0;
      for (std::size_t n = 0; n < batch_->count(); ++n) {
        const auto idx = embed_indices(*e, batch_->position(n));
        std::size_t offset = 0;
        for (std::size_t t = 0; t < idx.size(); ++t) {
          const std::size_t row = resolve_index(idx[t], table.tables[t].dim(0), e->out_of_range);
          auto g = table_grads_[t].row(row);
          for (std::size_t j = 0; j < g.size(); ++j)
            g[j] += d_pe.at(n, offset + j);
          offset += g.size();
        }
      }
    }
  }

  void append_refs(std::vector<ParamRef> &refs) {
    if (const auto *f = std::get_if<FourierMlp>(&spec_)) {
      for (const auto &r : trainable_refs(std::get<FourierPEParams>(params_), fourier_grads_, f->config))
        refs.push_back(r);
    } else if (auto *t = std::get_if<EmbedTable>(&params_)) {
      for (std::size_t i = 0; i < t->tables.size(); ++i)
        refs.push_back({"table", &t->tables[i], &table_grads_[i]});
    }
  }

private:
  const EncoderSpec &spec_;
  EncoderParams &params_;
  std::optional<PositionBatch> batch_;
  std::optional<PositionBatch> grouped_;
  EncodeCache cache_;
  GradientStore fourier_grads_;
  std::vector<Tensor> table_grads_;
};

struct ForwardState {
  Tensor embeddings; // [T, E]
  Projections proj;  // query projection uses only row 0
  Tensor q;
  Tensor k, v;
  Tensor weights;
  Tensor attended; // [1, d_v]
  Tensor probs;    // [1, items]
};

Tensor rows_from(const Tensor &m, std::size_t first, std::size_t count) {
  Tensor out({count, m.dim(1)});
  std::copy_n(m.data().begin() + static_cast<std::ptrdiff_t>(first * m.dim(1)), count * m.dim(1),
              out.data().begin());
  return out;
}

ForwardState forward_instance(const RetrievalModel &model, const Tensor &content, const Tensor &pe) {
  ForwardState s;
  s.embeddings = content + pe;
  const std::size_t items = content.dim(0) - 1;
  s.q = matmul(rows_from(s.embeddings, 0, 1), model.attention.query);
  const Tensor item_rows = rows_from(s.embeddings, 1, items);
  s.k = matmul(item_rows, model.attention.key);
  s.v = matmul(item_rows, model.attention.value);
  s.attended = attention(s.q, s.k, s.v, &s.weights);
  s.probs = softmax(add_bias(matmul(s.attended, model.head_weight), model.head_bias));
  return s;
}

struct ModelGrads {
  AttentionParams attention;
  Tensor head_weight, head_bias;
};

/// Accumulates parameter gradients of (1/batch) * cross-entropy and returns
/// the gradient with respect to the positional encodings of this instance.
Tensor backward_instance(const RetrievalModel &model, const ForwardState &s, std::size_t label,
                         double weight, ModelGrads &g) {
  const std::size_t items = s.probs.dim(1);
  Tensor d_logits = s.probs;
  d_logits[label] -= 1.0;
  for (auto &v : d_logits.data())
    v *= weight;
  g.head_bias = g.head_bias + column_sums(d_logits);
  g.head_weight = g.head_weight + matmul_tn(s.attended, d_logits);
  const Tensor d_attended = matmul_nt(d_logits, model.head_weight);
  const AttentionGrads ag = attention_backward(s.q, s.k, s.v, s.weights, d_attended);

  const Tensor query_row = rows_from(s.embeddings, 0, 1);
  const Tensor item_rows = rows_from(s.embeddings, 1, items);
  g.attention.query = g.attention.query + matmul_tn(query_row, ag.q);
  g.attention.key = g.attention.key + matmul_tn(item_rows, ag.k);
  g.attention.value = g.attention.value + matmul_tn(item_rows, ag.v);

  Tensor d_embed({items + 1, s.embeddings.dim(1)});
  const Tensor d_query = matmul_nt(ag.q, model.attention.query);
  const Tensor d_items = matmul_nt(ag.k, model.attention.key) + matmul_nt(ag.v, model.attention.value);
  std::copy(d_query.data().begin(), d_query.data().end(), d_embed.row(0).begin());
  std::copy(d_items.data().begin(), d_items.data().end(), d_embed.row(1).begin());
  return d_embed;
}

PositionBatch instance_positions(const RetrievalInstance &inst) {
  return PositionBatch(inst.positions.reshaped({inst.positions.dim(0), 1, 2}));
}

} // namespace

Tensor retrieval_logits(const RetrievalModel &model, const RetrievalInstance &inst) {
  const Tensor pe = encode_positions(model.spec, model.encoder, instance_positions(inst));
  const ForwardState s = forward_instance(model, inst.content, pe);
  return add_bias(matmul(s.attended, model.head_weight), model.head_bias);
}

double accuracy(const RetrievalModel &model, const std::vector<RetrievalInstance> &split,
                std::size_t *failures) {
  if (split.empty())
    return 0.0;
  std::size_t correct = 0, failed = 0;
  for (const auto &inst : split) {
    try {
      const Tensor logits = retrieval_logits(model, inst);
      const auto best = std::max_element(logits.data().begin(), logits.data().end());
      if (static_cast<std::size_t>(best - logits.data().begin()) == inst.label)
        ++correct;
    } catch (const UnseenPositionError &) {
      ++failed;
    }
  }
  if (failures)
    *failures = failed;
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

RetrievalResult train_and_eval(const EncoderSpec &spec, const RetrievalTask &task,
                               const TrainOptions &options, SeededRng &rng) {
  task.validate();
  validate(spec);
  if (input_width(spec) != 2)
    throw std::invalid_argument("retrieval encoders must take 2 coordinates");
  if (output_dim(spec) != task.content_dim)
    throw std::invalid_argument("encoder width " + std::to_string(output_dim(spec)) +
                                " must equal content_dim " + std::to_string(task.content_dim));
  if (options.batch == 0)
    throw std::invalid_argument("batch size must be positive");

  SeededRng data_rng(task.seed);
  const RetrievalDataset data = generate_retrieval_task(task, data_rng);

  SeededRng init_rng = rng.split(1);
  SeededRng batch_rng = rng.split(2);
  SeededRng dropout_rng = rng.split(3);

  RetrievalResult result;
  RetrievalModel &model = result.model;
  model.spec = spec;
  model.encoder = init_encoder_params(spec, init_rng);
  model.attention = AttentionParams::init(task.content_dim, options.key_dim, options.value_dim, init_rng);
  model.head_weight = sample(init_rng, NormalDist{0.0, 1.0 / std::sqrt(static_cast<double>(options.value_dim))},
                             {options.value_dim, task.items});
  model.head_bias = Tensor({task.items});

  EncoderRunner runner(model.spec, model.encoder);
  AdamState adam{options.adam, 0, {}, {}};
  const std::size_t tokens = task.items + 1;

  for (std::size_t step = 0; step < options.steps; ++step) {
    std::vector<std::size_t> picks(options.batch);
    for (auto &p : picks)
      p = batch_rng.below(data.train.size());

    Tensor positions({options.batch * tokens, 1, 2});
    for (std::size_t b = 0; b < options.batch; ++b)
      std::copy(data.train[picks[b]].positions.data().begin(), data.train[picks[b]].positions.data().end(),
                positions.data().begin() + static_cast<std::ptrdiff_t>(b * tokens * 2));
    const PositionBatch batch(std::move(positions));
    const Tensor pe = runner.forward(batch, Mode::Train, &dropout_rng);

    ModelGrads g{{Tensor(model.attention.query.shape()), Tensor(model.attention.key.shape()),
                  Tensor(model.attention.value.shape())},
                 Tensor(model.head_weight.shape()),
                 Tensor(model.head_bias.shape())};
    Tensor d_pe(pe.shape());
    double loss = 0.0;
    const double weight = 1.0 / static_cast<double>(options.batch);
    for (std::size_t b = 0; b < options.batch; ++b) {
      const auto &inst = data.train[picks[b]];
      const Tensor inst_pe = rows_from(pe, b * tokens, tokens);
      const ForwardState s = forward_instance(model, inst.content, inst_pe);
      loss -= std::log(std::max(s.probs[inst.label], 1e-300)) * weight;
      const Tensor d = backward_instance(model, s, inst.label, weight, g);
      std::copy(d.data().begin(), d.data().end(),
                d_pe.data().begin() + static_cast<std::ptrdiff_t>(b * tokens * d.dim(1)));
    }
    if (!std::isfinite(loss))
      throw DivergenceError(step, "cross-entropy is not finite");
    result.loss_trace.push_back(loss);

    runner.backward(d_pe);
    std::vector<ParamRef> refs;
    runner.append_refs(refs);
    refs.push_back({"m_q", &model.attention.query, &g.attention.query});
    refs.push_back({"m_k", &model.attention.key, &g.attention.key});
    refs.push_back({"m_v", &model.attention.value, &g.attention.value});
    refs.push_back({"head_w", &model.head_weight, &g.head_weight});
    refs.push_back({"head_b", &model.head_bias, &g.head_bias});
    adam_step(refs, adam);
  }

  result.seen_accuracy = accuracy(model, data.test_seen);
  result.unseen_accuracy = accuracy(model, data.test_unseen, &result.unseen_failures);
  return result;
}

} // namespace lffpe
