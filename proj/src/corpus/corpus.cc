#include "tsnmt/corpus/corpus.h"

#include <fstream>

#include "tsnmt/corpus/task_tokens.h"
#include "tsnmt/corpus/tokenize.h"
#include "tsnmt/errors.h"

namespace tsnmt::corpus {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
  }
  return out;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

void check_aligned(const PairCorpus& corpus) {
  if (corpus.first.size() != corpus.second.size())
    throw AlignmentError(corpus.pair.str() + ": line " + std::to_string(std::min(corpus.first.size(), corpus.second.size()) + 1) +
                         " has no counterpart (" + std::to_string(corpus.first.size()) + " vs " +
                         std::to_string(corpus.second.size()) + " lines)");
}

PairCorpus read_pair_corpus(const Direction& pair, const std::string& src_path, const std::string& tgt_path) {
  PairCorpus c{pair, read_lines(src_path), read_lines(tgt_path)};
  check_aligned(c);
  return c;
}

std::vector<DirectedSentence> merge_bidirectional_corpus(const std::vector<PairCorpus>& corpora) {
  std::vector<DirectedSentence> out;
  for (const auto& c : corpora) {
    check_aligned(c);
    const Direction back{c.pair.tgt, c.pair.src};
    for (std::size_t i = 0; i < c.first.size(); ++i) {
      out.push_back({c.pair, c.first[i], c.second[i]});
      out.push_back({back, c.second[i], c.first[i]});
    }
  }
  return out;
}

ParallelExample prepare_example(const DirectedSentence& s, const bpe::BpeModel* bpe, Variant variant,
                                const std::vector<std::string>& languages) {
  auto src = tokenize(s.src);
  auto tgt = tokenize(s.tgt);
  if (bpe) {
    src = bpe::apply_bpe_tokens(*bpe, src);
    tgt = bpe::apply_bpe_tokens(*bpe, tgt);
  }
  ParallelExample ex;
  ex.src = augment_task_tokens(variant, s.direction, src, languages);
  ex.tgt = std::move(tgt);
  ex.task = strip_attention_selector(variant, ex.src, languages).first;
  ex.direction = s.direction;
  return ex;
}

std::vector<ParallelExample> prepare_examples(const std::vector<DirectedSentence>& sentences, const bpe::BpeModel* bpe,
                                              Variant variant, const std::vector<std::string>& languages) {
  std::vector<ParallelExample> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(prepare_example(s, bpe, variant, languages));
  return out;
}

EncodedExample encode_example(const ParallelExample& ex, Variant variant, const std::vector<std::string>& languages,
                              const Vocab& src_vocab, const Vocab& tgt_vocab) {
  auto [key, tokens] = strip_attention_selector(variant, ex.src, languages);
  return {src_vocab.encode(tokens), tgt_vocab.encode(ex.tgt), key, ex.direction};
}

std::vector<EncodedExample> encode_examples(const std::vector<ParallelExample>& examples, Variant variant,
                                            const std::vector<std::string>& languages, const Vocab& src_vocab,
                                            const Vocab& tgt_vocab) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(encode_example(ex, variant, languages, src_vocab, tgt_vocab));
  return out;
}

std::map<std::string, std::size_t> count_tokens(const std::vector<ParallelExample>& examples, bool source_side, Variant variant,
                                                const std::vector<std::string>& languages) {
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : examples) {
    if (source_side) {
      for (const auto& t : strip_attention_selector(variant, ex.src, languages).second) ++counts[t];
    } else {
      for (const auto& t : ex.tgt) ++counts[t];
    }
  }
  return counts;
}

Vocab build_source_vocab(const std::vector<ParallelExample>& examples, Variant variant, const std::vector<std::string>& languages) {
  return build_vocab(count_tokens(examples, true, variant, languages), all_task_tokens(languages));
}

Vocab build_target_vocab(const std::vector<ParallelExample>& examples) {
  return build_vocab(count_tokens(examples, false, Variant::Shared, {}), {});
}

std::map<std::string, std::size_t> word_counts(const std::vector<DirectedSentence>& sentences) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences) {
    for (const auto& w : tokenize(s.src)) ++counts[w];
    for (const auto& w : tokenize(s.tgt)) ++counts[w];
  }
  return counts;
}

}  // namespace tsnmt::corpus
