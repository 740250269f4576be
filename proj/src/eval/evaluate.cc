#include "tsnmt/eval/evaluate.h"

#include <algorithm>
#include <filesystem>
#include <thread>

#include "tsnmt/corpus/corpus.h"
#include "tsnmt/corpus/task_tokens.h"
#include "tsnmt/corpus/tokenize.h"
#include "tsnmt/errors.h"

namespace tsnmt::eval {

Translator::Translator(ModelParams<float> params, corpus::Vocab src_vocab, corpus::Vocab tgt_vocab,
                       std::optional<bpe::BpeModel> bpe)
    : params_(std::move(params)), src_vocab_(std::move(src_vocab)), tgt_vocab_(std::move(tgt_vocab)), bpe_(std::move(bpe)) {
  if (src_vocab_.size() != params_.config.src_vocab || tgt_vocab_.size() != params_.config.tgt_vocab)
    throw ConfigError("vocabulary sizes do not match the model");
}

Translator::Translator(const train::Checkpoint& ckpt, std::optional<bpe::BpeModel> bpe)
    : Translator(ckpt.params, ckpt.src_vocab, ckpt.tgt_vocab, std::move(bpe)) {}

bool Translator::supports(const Direction& dir) const {
  if (variant() == Variant::Shared) return true;
  return params_.attention.entries.count(TaskKey::for_direction(variant(), dir)) != 0;
}

Translation Translator::translate(const std::string& line, const Direction& dir, const DecodeOptions& opts) const {
  const auto& langs = languages();
  const auto ex = corpus::prepare_example({dir, line, ""}, bpe_ ? &*bpe_ : nullptr, variant(), langs);
  const auto enc = corpus::encode_example(ex, variant(), langs, src_vocab_, tgt_vocab_);
  Translation out;
  out.model_input = corpus::strip_attention_selector(variant(), ex.src, langs).second;
  NmtScorer scorer(params_, enc.task, enc.src);
  const std::size_t max_len = opts.max_len ? opts.max_len : default_max_len(enc.src.size());
  out.hypothesis = opts.beam <= 1 ? greedy_decode(scorer, max_len) : beam_decode(scorer, opts.beam, max_len);
  out.output = tgt_vocab_.decode(out.hypothesis.tokens);
  try {
    out.words = bpe::decode_bpe(out.output);
  } catch (const MalformedStreamError&) {
    // A hypothesis cut off by the length cap may end inside a word.
    auto tokens = out.output;
    if (!tokens.empty() && tokens.back().size() >= 2 && tokens.back().ends_with("@@"))
      tokens.back().resize(tokens.back().size() - 2);
    out.words = bpe::decode_bpe(tokens);
  }
  return out;
}

DirectionReport evaluate_direction(const std::vector<const Translator*>& models, const TestSet& test,
                                   const DecodeOptions& opts) {
  if (test.src.size() != test.ref.size())
    throw AlignmentError("test set for " + test.direction.str() + " has " + std::to_string(test.src.size()) +
                         " sources and " + std::to_string(test.ref.size()) + " references");
  DirectionReport report;
  report.direction = test.direction;
  std::vector<std::string> refs;
  for (const auto& r : test.ref) refs.push_back(corpus::join(corpus::tokenize(r)));
  for (const auto* model : models) {
    if (!model->supports(test.direction)) {
      report.skipped = true;
      report.skip_reason = std::string("unknown task: ") + variant_name(model->variant()) + " model has no attention parameters for " +
                           test.direction.str();
      report.seeds.clear();
      return report;
    }
    const std::size_t n = test.src.size();
    std::vector<std::string> hyps(n);
    std::vector<double> entropies(n);
    auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto t = model->translate(test.src[i], test.direction, opts);
        hyps[i] = corpus::join(t.words);
        entropies[i] = attention_entropy(t.hypothesis.attention);
      }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(opts.threads, n));
    if (threads == 1) {
      work(0, n);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(work, k * n / threads, (k + 1) * n / threads);
      for (auto& th : pool) th.join();
    }
    SeedResult r;
    r.bleu = bleu_score(hyps, refs);
    std::size_t exact = 0;
    double entropy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      exact += hyps[i] == refs[i];
      entropy += entropies[i];
    }
    r.accuracy = n ? static_cast<double>(exact) / static_cast<double>(n) : 0.0;
    r.entropy = n ? entropy / static_cast<double>(n) : 0.0;
    r.hypotheses = std::move(hyps);
    report.seeds.push_back(std::move(r));
  }
  if (!report.seeds.empty()) {
    for (const auto& s : report.seeds) {
      report.mean_bleu += s.bleu.bleu;
      report.mean_accuracy += s.accuracy;
      report.mean_entropy += s.entropy;
    }
    const double k = static_cast<double>(report.seeds.size());
    report.mean_bleu /= k;
    report.mean_accuracy /= k;
    report.mean_entropy /= k;
  }
  return report;
}

std::vector<Translator> load_translators(const std::vector<std::string>& checkpoint_paths,
                                         const std::optional<bpe::BpeModel>& bpe) {
  std::vector<Translator> out;
  for (const auto& path : checkpoint_paths) {
    if (!std::filesystem::exists(path)) throw ConfigError("missing checkpoint " + path);
    out.emplace_back(train::load_checkpoint(path), bpe);
  }
  return out;
}

std::vector<Direction> zero_shot_directions(const std::vector<std::string>& languages, const std::vector<Direction>& trained) {
  std::vector<Direction> out;
  for (const auto& s : languages)
    for (const auto& t : languages) {
      if (s == t) continue;
      const bool covered = std::any_of(trained.begin(), trained.end(), [&](const Direction& d) {
        return (d.src == s && d.tgt == t) || (d.src == t && d.tgt == s);
      });
      if (!covered) out.push_back({s, t});
    }
  return out;
}

}  // namespace tsnmt::eval
