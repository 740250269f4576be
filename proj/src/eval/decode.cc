#include "tsnmt/eval/decode.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsnmt/errors.h"

namespace tsnmt::eval {

std::size_t default_max_len(std::size_t source_length) { return 3 * source_length + 10; }

namespace {

struct Live {
  std::size_t state;
  Hypothesis hyp;
};

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

}  // namespace

Hypothesis greedy_decode(Scorer& scorer, std::size_t max_len) {
  Hypothesis h;
  std::size_t state = scorer.start();
  for (std::size_t t = 0; t < max_len; ++t) {
    const auto lp = scorer.log_probs(state);
    const int best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    h.log_prob += lp[best];
    if (best == scorer.end_token()) {
      h.finished = true;
      return h;
    }
    auto alpha = scorer.attention(state);
    if (!alpha.empty()) h.attention.append_column(alpha);
    h.tokens.push_back(best);
    state = scorer.advance(state, best);
  }
  return h;
}

Hypothesis beam_decode(Scorer& scorer, std::size_t beam, std::size_t max_len) {
  if (beam == 0) throw ConfigError("beam size must be at least 1");
  std::vector<Live> live{{scorer.start(), Hypothesis{}}};
  std::vector<Hypothesis> finished;
  const int eos = scorer.end_token();
  for (std::size_t t = 0; t < max_len && !live.empty(); ++t) {
    struct Candidate {
      std::size_t parent;
      int token;
      double log_prob;
    };
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const auto lp = scorer.log_probs(live[i].state);
      for (std::size_t tok = 0; tok < lp.size(); ++tok)
        cands.push_back({i, static_cast<int>(tok), live[i].hyp.log_prob + lp[tok]});
    }
    // Live hypotheses are kept in rank order, so comparing (parent, token)
    // orders equal-score candidates by their token sequences.
    const std::size_t keep = std::min(beam, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      const auto& ta = live[a.parent].hyp.tokens;
      const auto& tb = live[b.parent].hyp.tokens;
      if (a.parent != b.parent) {
        if (ta != tb) return ta < tb;
        return a.parent < b.parent;
      }
      return a.token < b.token;
    });
    std::vector<Live> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const auto& c = cands[k];
      const auto& parent = live[c.parent];
      Hypothesis h = parent.hyp;
      h.log_prob = c.log_prob;
      if (c.token == eos) {
        h.finished = true;
        finished.push_back(std::move(h));
        continue;
      }
      auto alpha = scorer.attention(parent.state);
      if (!alpha.empty()) h.attention.append_column(alpha);
      h.tokens.push_back(c.token);
      next.push_back({scorer.advance(parent.state, c.token), std::move(h)});
    }
    live = std::move(next);
    // Scores only decrease as tokens are added.
    if (!finished.empty() && !live.empty()) {
      const auto& best_done = *std::min_element(finished.begin(), finished.end(), better);
      if (best_done.log_prob >= live.front().hyp.log_prob) live.clear();
    }
  }
  for (auto& l : live) finished.push_back(std::move(l.hyp));
  return *std::min_element(finished.begin(), finished.end(), better);
}

NmtScorer::NmtScorer(const ModelParams<float>& params, const TaskKey& task, const std::vector<int>& src_ids)
    : params_(const_cast<ModelParams<float>&>(params)), task_(task), graph_(std::make_unique<Graph<float>>()) {
  select_attention_params(params_.attention, task_);
  if (src_ids.empty()) throw ContractError("cannot decode an empty source sentence");
  auto src = PaddedIds::from_sequences({src_ids}, corpus::Vocab::kEos);
  enc_ = encode(*graph_, params_, src);
}

std::size_t NmtScorer::start() {
  states_.push_back(State{enc_.initial_state});
  return states_.size() - 1;
}

void NmtScorer::expand(State& st) {
  if (st.expanded) return;
  auto step = decoder_step(*graph_, params_, task_, st.s, {st.prev}, enc_);
  const auto& logits = step.logits.value();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) mx = std::max(mx, static_cast<double>(logits[i]));
  double z = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += std::exp(static_cast<double>(logits[i]) - mx);
  const double lz = mx + std::log(z);
  st.log_probs.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) st.log_probs[i] = static_cast<double>(logits[i]) - lz;
  const auto& a = step.alpha.value();
  st.alpha.assign(a.values().begin(), a.values().end());
  st.next_s = step.state;
  st.expanded = true;
}

std::vector<double> NmtScorer::log_probs(std::size_t state) {
  expand(states_.at(state));
  return states_[state].log_probs;
}

std::vector<double> NmtScorer::attention(std::size_t state) {
  expand(states_.at(state));
  return states_[state].alpha;
}

std::size_t NmtScorer::advance(std::size_t state, int token) {
  expand(states_.at(state));
  State next{states_[state].next_s, token};
  states_.push_back(std::move(next));
  return states_.size() - 1;
}

}  // namespace tsnmt::eval
