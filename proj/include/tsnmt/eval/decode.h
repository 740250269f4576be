#pragma once

#include <memory>
#include <vector>

#include "tsnmt/corpus/vocab.h"
#include "tsnmt/eval/attention.h"
#include "tsnmt/model/nmt_model.h"

namespace tsnmt::eval {

// Next-token distribution over an implicit tree of decoder states. States are
// opaque handles owned by the scorer.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::size_t start() = 0;
  // Log-probabilities of the next token from `state`.
  virtual std::vector<double> log_probs(std::size_t state) = 0;
  // The state after emitting `token` from `state`.
  virtual std::size_t advance(std::size_t state, int token) = 0;
  // Attention used for the distribution at `state`; empty if not tracked.
  virtual std::vector<double> attention(std::size_t) { return {}; }
  virtual int end_token() const = 0;
};

struct Hypothesis {
  std::vector<int> tokens;  // sentence-end excluded
  double log_prob = 0;
  bool finished = false;    // ended with sentence-end rather than the length cap
  AttentionMatrix attention;  // one column per token in `tokens`
};

Hypothesis greedy_decode(Scorer& scorer, std::size_t max_len);
// Length-unnormalized beam search. Candidates are ranked by log-probability,
// ties broken by the lower token sequence; a candidate ending in the
// sentence-end token leaves the beam as a finished hypothesis.
Hypothesis beam_decode(Scorer& scorer, std::size_t beam, std::size_t max_len);

std::size_t default_max_len(std::size_t source_length);

// Scores target tokens with a trained model for one encoded source sentence.
class NmtScorer : public Scorer {
 public:
  NmtScorer(const ModelParams<float>& params, const TaskKey& task, const std::vector<int>& src_ids);

  std::size_t start() override;
  std::vector<double> log_probs(std::size_t state) override;
  std::size_t advance(std::size_t state, int token) override;
  std::vector<double> attention(std::size_t state) override;
  int end_token() const override { return corpus::Vocab::kEos; }

 private:
  struct State {
    Expr<float> s;
    int prev = corpus::Vocab::kBos;
    bool expanded = false;
    Expr<float> next_s;
    std::vector<double> log_probs;
    std::vector<double> alpha;
  };
  void expand(State& st);

  ModelParams<float>& params_;
  TaskKey task_;
  std::unique_ptr<Graph<float>> graph_;
  EncoderOutput<float> enc_;
  std::vector<State> states_;
};

}  // namespace tsnmt::eval
