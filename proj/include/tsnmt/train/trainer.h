#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tsnmt/corpus/batching.h"
#include "tsnmt/model/params.h"
#include "tsnmt/train/adam.h"
#include "tsnmt/train/checkpoint.h"

namespace tsnmt::train {

struct TrainingConfig {
  std::size_t d_emb = 256;
  std::size_t d_hidden = 256;
  std::size_t layers = 1;
  std::size_t batch_tokens = 5000;
  Variant variant = Variant::Shared;
  AttentionQuery attention_query = AttentionQuery::Intermediate;
  std::size_t seeds = 5;
  std::size_t epochs = 10;
  std::size_t validations_per_epoch = 1;
  double clip_norm = 0;  // 0 disables clipping
  double init_range = 0.08;
  AdamConfig adam;

  // d = 64, a 500-token cap, and matrices initialized in [-0.3, 0.3].
  static TrainingConfig desk();
  void validate() const;
};

struct MetricsRow {
  std::uint64_t seed = 0;
  double epoch = 0;  // fractional epochs completed
  std::uint64_t examples = 0;
  double train_nll = 0;  // per target token since the previous row
  double val_ppl = 0;
  std::optional<double> val_score;
};

class MetricsLog {
 public:
  static constexpr const char* kHeader = "seed\tepoch\texamples\ttrain_nll\tval_ppl\tval_score";

  void add(const MetricsRow& row);
  const std::vector<MetricsRow>& rows() const { return rows_; }
  std::string to_tsv() const;
  static MetricsLog parse_tsv(const std::string& text);
  void save(const std::string& path) const;

 private:
  std::vector<MetricsRow> rows_;
};

// Perplexity over a fixed set of batches: exp(total NLL / total target tokens).
double validation_perplexity(const ModelParams<float>& params, const std::vector<corpus::Batch>& batches);

// Single-threaded training over one seed. Batches are rebuilt and shuffled
// every epoch from a stream derived from the seed.
class Trainer {
 public:
  using ScoreFn = std::function<double(const ModelParams<float>&)>;

  Trainer(TrainingConfig config, ModelParams<float> params, const std::vector<corpus::EncodedExample>& train,
          const std::vector<corpus::EncodedExample>& valid, std::uint64_t seed);

  // Runs one epoch, validating `validations_per_epoch` times at evenly spaced
  // batch boundaries. Returns the rows added to the log.
  std::vector<MetricsRow> train_epoch();
  // Runs the remaining epochs of the budget.
  void train();

  double validate() const;
  // One optimizer step on a single batch; returns its summed NLL.
  double step(const corpus::Batch& batch);

  void set_score_fn(ScoreFn fn) { score_fn_ = std::move(fn); }

  const ModelParams<float>& params() const { return params_; }
  ModelParams<float>& params() { return params_; }
  const ModelParams<float>& best_params() const { return best_ ? *best_ : params_; }
  double best_perplexity() const { return best_ppl_; }
  const AdamState<float>& adam() const { return adam_; }
  const MetricsLog& log() const { return log_; }
  std::uint64_t epochs_done() const { return epoch_; }
  std::uint64_t examples_seen() const { return examples_; }
  std::uint64_t seed() const { return seed_; }

  // Model, optimizer and progress counters. Vocabularies are filled by the caller.
  Checkpoint checkpoint() const;
  void resume(const Checkpoint& ckpt);

 private:
  TrainingConfig config_;
  ModelParams<float> params_;
  const std::vector<corpus::EncodedExample>& train_;
  std::vector<corpus::Batch> valid_batches_;
  std::uint64_t seed_;
  AdamState<float> adam_;
  MetricsLog log_;
  ScoreFn score_fn_;
  std::optional<ModelParams<float>> best_;
  double best_ppl_ = 0;
  std::uint64_t epoch_ = 0;
  std::uint64_t examples_ = 0;
};

}  // namespace tsnmt::train
