#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lffpe/adam.hpp"
#include "lffpe/attention.hpp"
#include "lffpe/encoder_spec.hpp"

namespace lffpe {

/// Cells whose coordinate on `axis` lies in [lo, hi) never appear in
/// training instances.
struct CoordinateBand {
  std::size_t axis = 1;
  std::size_t lo = 0;
  std::size_t hi = 0;

  [[nodiscard]] bool contains(double row, double col) const;
};

/**
 * Nearest-item retrieval on a small grid. Each instance is a query token
 * followed by `items` item tokens; the label is the item nearest (L2) to
 * the query, lowest index on ties. Item content is a one-hot slot marker
 * plus Gaussian noise, so only positions tell the items apart.
 */
struct RetrievalTask {
  std::size_t grid_height = 12;
  std::size_t grid_width = 12;
  CoordinateBand holdout{1, 5, 7};
  std::size_t items = 3;
  std::size_t content_dim = 32;
  double content_noise = 0.02;
  std::size_t train_instances = 4000;
  std::size_t test_instances = 800; // per split (seen and unseen)
  std::uint64_t seed = 0;

  void validate() const;
};

struct RetrievalInstance {
  Tensor positions; // [items + 1, 2]; row 0 is the query
  Tensor content;   // [items + 1, content_dim]
  std::size_t label = 0;
  bool unseen = false;
};

struct RetrievalDataset {
  std::vector<RetrievalInstance> train;
  std::vector<RetrievalInstance> test_seen;
  std::vector<RetrievalInstance> test_unseen;
};

/// Index of the item row nearest to the query row; ties go to the lower index.
std::size_t nearest_item(const Tensor &positions);

/// Training and seen-test instances use only cells outside the band;
/// unseen-test instances put the query inside it (items anywhere).
/// Throws std::invalid_argument for regions with fewer than items + 1 cells.
RetrievalDataset generate_retrieval_task(const RetrievalTask &task, SeededRng &rng);

/// One row per token: split,instance,token,row,col,label,c0,c1,...
void write_dataset_csv(std::ostream &out, const RetrievalDataset &data);

struct RetrievalModel {
  EncoderSpec spec;
  EncoderParams encoder;
  AttentionParams attention;
  Tensor head_weight; // [d_v, items]
  Tensor head_bias;   // [items]
};

struct TrainOptions {
  std::size_t steps = 5000;
  std::size_t batch = 32;
  std::size_t key_dim = 16;
  std::size_t value_dim = 16;
  AdamConfig adam{3e-3, 0.9, 0.999, 1e-8};
};

struct RetrievalResult {
  double seen_accuracy = 0.0;
  double unseen_accuracy = 0.0;
  /// Unseen-test instances the encoder could not encode at all (embedding
  /// index outside the vocabulary); counted as wrong.
  std::size_t unseen_failures = 0;
  std::vector<double> loss_trace; // mean cross-entropy per step
  RetrievalModel model;
};

/// Logits over items for one instance.
Tensor retrieval_logits(const RetrievalModel &model, const RetrievalInstance &inst);

double accuracy(const RetrievalModel &model, const std::vector<RetrievalInstance> &split,
                std::size_t *failures = nullptr);

/**
 * Trains encoder + single-head attention + linear head with cross-entropy
 * via Adam, then scores both test splits. The encoder must take 2
 * coordinates and emit content_dim values (positions are added to
 * content).
 */
RetrievalResult train_and_eval(const EncoderSpec &spec, const RetrievalTask &task,
                               const TrainOptions &options, SeededRng &rng);

} // namespace lffpe
