#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsnmt/eval/evaluate.h"
#include "tsnmt/toy/toy.h"
#include "tsnmt/train/trainer.h"

namespace tsnmt::app {

// Model-ready data for one variant. Vocabularies depend only on the words,
// so they are identical across variants.
struct PreparedData {
  Variant variant = Variant::Shared;
  std::vector<std::string> languages;
  std::vector<Direction> trained_directions;
  corpus::Vocab src_vocab, tgt_vocab;
  std::vector<corpus::EncodedExample> train, valid;
};

PreparedData prepare_data(const std::vector<corpus::PairCorpus>& train, const std::vector<corpus::PairCorpus>& valid,
                          Variant variant, const std::vector<std::string>& languages);

ModelConfig model_config(const train::TrainingConfig& cfg, const PreparedData& data);

// Seed used by run k of an experiment with base seed `seed`.
std::uint64_t run_seed(std::uint64_t seed, std::size_t k);

struct ExperimentConfig {
  toy::ToyCorpusSpec spec;
  train::TrainingConfig training = train::TrainingConfig::desk();
  std::vector<Variant> variants{Variant::Shared, Variant::Target, Variant::Source, Variant::Paired};
  std::uint64_t seed = 1;
  eval::DecodeOptions decode;
  std::size_t jobs = 1;
  std::string out_dir;  // empty: nothing written
  bool save_checkpoints = true;
};

struct RunResult {
  Variant variant = Variant::Shared;
  std::uint64_t seed = 0;
  train::MetricsLog log;
  double best_ppl = 0;
};

struct VariantResult {
  Variant variant = Variant::Shared;
  std::vector<RunResult> runs;                // one per seed
  std::vector<eval::DirectionReport> reports;  // one per direction
};

struct ExperimentResult {
  std::vector<Direction> directions;  // trained first, then zero-shot
  std::vector<bool> zero_shot;
  std::vector<VariantResult> variants;

  const VariantResult& variant(Variant v) const;
  const eval::DirectionReport& report(Variant v, const Direction& d) const;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

enum class ResultMetric { Bleu, Accuracy, Entropy };
// One row per variant, one column per direction; zero-shot columns carry a
// trailing '*'. Skipped cells read "n/a".
std::string results_tsv(const ExperimentResult& r, ResultMetric metric);
std::string results_text(const ExperimentResult& r);

}  // namespace tsnmt::app
