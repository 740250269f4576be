#pragma once

#include <map>
#include <string>
#include <vector>

#include "tsnmt/bpe/bpe.h"
#include "tsnmt/corpus/vocab.h"
#include "tsnmt/model/task_key.h"

namespace tsnmt::corpus {

// Sentence-aligned text for one language pair: first[i] (language pair.src)
// translates second[i] (language pair.tgt).
struct PairCorpus {
  Direction pair;
  std::vector<std::string> first;
  std::vector<std::string> second;
};

struct DirectedSentence {
  Direction direction;
  std::string src;
  std::string tgt;
};

struct ParallelExample {
  std::vector<std::string> src;  // BPE applied, task tokens added
  std::vector<std::string> tgt;
  TaskKey task = TaskKey::shared();
  Direction direction;
};

// Model-ready example: ids after the attention selector has been stripped.
struct EncodedExample {
  std::vector<int> src;
  std::vector<int> tgt;
  TaskKey task = TaskKey::shared();
  Direction direction;

  std::size_t token_count() const { return src.size() + tgt.size(); }
};

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

// Reads aligned `src_path`/`tgt_path`; AlignmentError names the first line
// without a counterpart.
PairCorpus read_pair_corpus(const Direction& pair, const std::string& src_path, const std::string& tgt_path);
void check_aligned(const PairCorpus& corpus);

// Each sentence pair in both directions: pair order, then line order, S->T
// before T->S.
std::vector<DirectedSentence> merge_bidirectional_corpus(const std::vector<PairCorpus>& corpora);

// Tokenize, apply BPE (when given), add task tokens, read back the task key.
ParallelExample prepare_example(const DirectedSentence& s, const bpe::BpeModel* bpe, Variant variant,
                                const std::vector<std::string>& languages);
std::vector<ParallelExample> prepare_examples(const std::vector<DirectedSentence>& sentences, const bpe::BpeModel* bpe,
                                              Variant variant, const std::vector<std::string>& languages);

EncodedExample encode_example(const ParallelExample& ex, Variant variant, const std::vector<std::string>& languages,
                              const Vocab& src_vocab, const Vocab& tgt_vocab);
std::vector<EncodedExample> encode_examples(const std::vector<ParallelExample>& examples, Variant variant,
                                            const std::vector<std::string>& languages, const Vocab& src_vocab,
                                            const Vocab& tgt_vocab);

// Token counts for one side ("src" after selector stripping, or "tgt").
std::map<std::string, std::size_t> count_tokens(const std::vector<ParallelExample>& examples, bool source_side, Variant variant,
                                                const std::vector<std::string>& languages);
Vocab build_source_vocab(const std::vector<ParallelExample>& examples, Variant variant, const std::vector<std::string>& languages);
Vocab build_target_vocab(const std::vector<ParallelExample>& examples);

// Word counts over both sides, the input to joint BPE learning.
std::map<std::string, std::size_t> word_counts(const std::vector<DirectedSentence>& sentences);

}  // namespace tsnmt::corpus
