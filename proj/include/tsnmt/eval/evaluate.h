#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsnmt/bpe/bpe.h"
#include "tsnmt/corpus/vocab.h"
#include "tsnmt/eval/bleu.h"
#include "tsnmt/eval/decode.h"
#include "tsnmt/train/checkpoint.h"

namespace tsnmt::eval {

struct DecodeOptions {
  std::size_t beam = 1;     // 1 means greedy
  std::size_t max_len = 0;  // 0 means 3 * source length + 10
  std::size_t threads = 1;
};

struct Translation {
  std::vector<std::string> model_input;  // source tokens fed to the encoder
  std::vector<std::string> output;       // target subword tokens
  std::vector<std::string> words;        // BPE joined
  Hypothesis hypothesis;
};

// A trained model bundled with its vocabularies and optional BPE codes.
class Translator {
 public:
  Translator(ModelParams<float> params, corpus::Vocab src_vocab, corpus::Vocab tgt_vocab,
             std::optional<bpe::BpeModel> bpe = std::nullopt);
  explicit Translator(const train::Checkpoint& ckpt, std::optional<bpe::BpeModel> bpe = std::nullopt);

  // `line` is raw source text; task tokens are added here. Throws
  // UnknownTaskError when the model has no attention parameters for `dir`.
  Translation translate(const std::string& line, const Direction& dir, const DecodeOptions& opts = {}) const;
  // Whether translate() can serve `dir`.
  bool supports(const Direction& dir) const;

  const ModelParams<float>& params() const { return params_; }
  Variant variant() const { return params_.config.variant; }
  const std::vector<std::string>& languages() const { return params_.config.languages; }

 private:
  ModelParams<float> params_;
  corpus::Vocab src_vocab_, tgt_vocab_;
  std::optional<bpe::BpeModel> bpe_;
};

struct TestSet {
  Direction direction;
  std::vector<std::string> src;
  std::vector<std::string> ref;
};

struct SeedResult {
  BleuReport bleu;
  double accuracy = 0;  // fraction of sentences reproduced exactly
  double entropy = 0;   // mean per-sentence attention entropy
  std::vector<std::string> hypotheses;
};

struct DirectionReport {
  Direction direction;
  bool skipped = false;
  std::string skip_reason;
  std::vector<SeedResult> seeds;
  double mean_bleu = 0;
  double mean_accuracy = 0;
  double mean_entropy = 0;
};

// Decodes the test set with each model and averages the scores. A model that
// has no attention parameters for the direction marks the report skipped.
DirectionReport evaluate_direction(const std::vector<const Translator*>& models, const TestSet& test,
                                   const DecodeOptions& opts = {});

// Loads one translator per checkpoint; a missing file is a ConfigError.
std::vector<Translator> load_translators(const std::vector<std::string>& checkpoint_paths,
                                         const std::optional<bpe::BpeModel>& bpe = std::nullopt);

// All ordered pairs of distinct languages not covered by a trained pair in
// either direction, in language-list order.
std::vector<Direction> zero_shot_directions(const std::vector<std::string>& languages,
                                            const std::vector<Direction>& trained);

}  // namespace tsnmt::eval
