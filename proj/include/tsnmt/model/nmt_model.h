#pragma once

#include <cstdint>
#include <vector>

#include "tsnmt/autodiff/graph.h"
#include "tsnmt/model/params.h"

namespace tsnmt {

using ad::Expr;
using ad::Graph;

// Right-padded, time-major id matrix: ids[t][b] with mask[t][b] = 1 for real
// tokens. Batch columns are sequences.
struct PaddedIds {
  std::vector<std::vector<int>> ids;
  std::vector<std::vector<std::uint8_t>> mask;
  std::size_t batch = 0;

  static PaddedIds from_sequences(const std::vector<std::vector<int>>& sequences, int pad_id);
  std::size_t length() const { return ids.size(); }
  bool column_full(std::size_t t) const;
};

template <class T>
struct EncoderOutput {
  std::vector<Expr<T>> states;  // h_i = [backward_i; forward_i], 2d x B
  std::vector<Expr<T>> keys;    // attention.U * h_i, d x B (independent of the query)
  Expr<T> initial_state;        // s_0, d x B
  std::vector<std::uint8_t> attention_mask;  // l x B row-major
  std::size_t batch = 0;

  std::size_t length() const { return states.size(); }
};

template <class T>
struct StepOutput {
  Expr<T> state;   // s_t
  Expr<T> logits;  // V_tgt x B
  Expr<T> alpha;   // l x B
};

template <class T>
Expr<T> gru_step(Graph<T>& g, GruParams<T>& p, Expr<T> x, Expr<T> h_prev);

template <class T>
EncoderOutput<T> encode(Graph<T>& g, ModelParams<T>& params, const PaddedIds& src);

// alpha = softmax_i( v . tanh(W q + U h_i + V y_prev + b) ), l x B.
template <class T>
Expr<T> attention_scores(Graph<T>& g, AttentionBank<T>& bank, AttentionEntry<T>& entry, Expr<T> query,
                         const EncoderOutput<T>& enc, Expr<T> prev_embedding);

// H = sum_i alpha_i * h_i.
template <class T>
Expr<T> context_vector(Expr<T> alpha, const std::vector<Expr<T>>& states);

template <class T>
StepOutput<T> decoder_step(Graph<T>& g, ModelParams<T>& params, const TaskKey& key, Expr<T> s_prev,
                           const std::vector<int>& prev_ids, const EncoderOutput<T>& enc);

}  // namespace tsnmt
