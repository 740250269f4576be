#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsnmt/corpus/corpus.h"

namespace tsnmt::toy {

struct Transform {
  enum class Kind { Identity, Reverse, Rotate };
  Kind kind = Kind::Identity;
  std::size_t k = 0;  // rotation amount

  static Transform identity() { return {Kind::Identity, 0}; }
  static Transform reverse() { return {Kind::Reverse, 0}; }
  static Transform rotate(std::size_t k) { return {Kind::Rotate, k}; }

  // "identity", "reverse", "rotate<k>"
  std::string str() const;
  static Transform parse(const std::string& text);
  bool operator==(const Transform&) const = default;
};

std::vector<int> transform_sequence(const Transform& t, const std::vector<int>& seq);
std::vector<int> invert_transform(const Transform& t, const std::vector<int>& seq);

// A language over the shared base symbols 0..V-1: a word-order transform
// followed by a bijective relabeling into its own surface tokens.
class ToyLanguage {
 public:
  ToyLanguage(std::string code, Transform transform, std::size_t base_vocab, std::uint64_t seed);

  const std::string& code() const { return code_; }
  const Transform& transform() const { return transform_; }
  std::size_t vocab_size() const { return surface_.size(); }

  const std::string& surface(int base) const { return surface_.at(static_cast<std::size_t>(base)); }
  // VocabularyError for tokens outside this language.
  int base(const std::string& token) const;

  std::vector<std::string> realize(const std::vector<int>& base_sentence) const;
  std::vector<int> analyze(const std::vector<std::string>& tokens) const;

 private:
  std::string code_;
  Transform transform_;
  std::vector<std::string> surface_;
  std::map<std::string, int> inverse_;
};

// Exact translation: undo the source relabeling and order, apply the target's.
std::vector<std::string> oracle_translate(const ToyLanguage& src, const ToyLanguage& tgt, const std::vector<std::string>& sentence);
std::string oracle_translate(const ToyLanguage& src, const ToyLanguage& tgt, const std::string& sentence);

struct ToyCorpusSpec {
  std::vector<std::string> languages{"A", "B", "C"};
  std::vector<Transform> transforms{Transform::identity(), Transform::reverse(), Transform::rotate(1)};
  std::string hub = "A";
  // Unordered pairs, listed once; each is trained in both directions.
  std::vector<Direction> trained{{"A", "B"}, {"A", "C"}};
  std::vector<Direction> zero_shot{{"B", "C"}};
  std::size_t sentences_per_pair = 2000;
  std::size_t valid_per_pair = 200;
  std::size_t test_per_pair = 200;
  std::size_t min_length = 3;
  std::size_t max_length = 10;
  std::size_t base_vocab = 50;
  std::uint64_t seed = 1;

  void validate() const;
  // Flat key=value text; unknown keys are a ConfigError.
  static ToyCorpusSpec parse(const std::string& text);
  static ToyCorpusSpec load(const std::string& path);
  std::string str() const;

  std::vector<ToyLanguage> build_languages() const;
  const ToyLanguage& language(const std::vector<ToyLanguage>& langs, const std::string& code) const;
  // Trained pairs expanded to both directions.
  std::vector<Direction> trained_directions() const;
};

struct ToyCorpus {
  std::vector<ToyLanguage> languages;
  std::vector<corpus::PairCorpus> train;  // trained pairs only
  std::vector<corpus::PairCorpus> valid;  // trained pairs only
  std::vector<corpus::PairCorpus> test;   // trained and zero-shot pairs
};

// Base sentences are drawn i.i.d. and are distinct across all pairs and splits.
ToyCorpus generate_parallel_corpus(const ToyCorpusSpec& spec);

// Writes <split>.<S>-<T>.src / .tgt into `dir`, plus spec.cfg.
void write_toy_corpus(const ToyCorpus& corpus, const ToyCorpusSpec& spec, const std::string& dir);

std::string split_file(const std::string& dir, const std::string& split, const Direction& pair, bool source_side);

}  // namespace tsnmt::toy
