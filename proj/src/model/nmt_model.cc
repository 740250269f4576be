#include "tsnmt/model/nmt_model.h"

#include <algorithm>

#include "tsnmt/errors.h"

namespace tsnmt {

PaddedIds PaddedIds::from_sequences(const std::vector<std::vector<int>>& sequences, int pad_id) {
  PaddedIds out;
  out.batch = sequences.size();
  std::size_t len = 0;
  for (const auto& s : sequences) len = std::max(len, s.size());
  out.ids.assign(len, std::vector<int>(out.batch, pad_id));
  out.mask.assign(len, std::vector<std::uint8_t>(out.batch, 0));
  for (std::size_t b = 0; b < sequences.size(); ++b)
    for (std::size_t t = 0; t < sequences[b].size(); ++t) {
      out.ids[t][b] = sequences[b][t];
      out.mask[t][b] = 1;
    }
  return out;
}

bool PaddedIds::column_full(std::size_t t) const {
  return std::all_of(mask[t].begin(), mask[t].end(), [](std::uint8_t m) { return m != 0; });
}

template <class T>
Expr<T> gru_step(Graph<T>& g, GruParams<T>& p, Expr<T> x, Expr<T> h_prev) {
  if (x.value().rows() != p.input_size())
    throw DimensionError("gru_step: input has " + std::to_string(x.value().rows()) + " rows, expected " +
                         std::to_string(p.input_size()));
  if (h_prev.value().rows() != p.hidden_size() || h_prev.value().cols() != x.value().cols())
    throw DimensionError("gru_step: state shape [" + h_prev.shape().str() + "] does not fit input [" + x.shape().str() + "]");
  auto P = [&](Parameter<T>& q) { return g.parameter(q); };
  auto z = ad::sigmoid(matmul(P(p.w_z), x) + matmul(P(p.u_z), h_prev) + P(p.b_z));
  auto r = ad::sigmoid(matmul(P(p.w_r), x) + matmul(P(p.u_r), h_prev) + P(p.b_r));
  auto candidate = ad::tanh(matmul(P(p.w_h), x) + matmul(P(p.u_h), cmul(r, h_prev)) + P(p.b_h));
  return h_prev + cmul(z, candidate - h_prev);
}

template <class T>
EncoderOutput<T> encode(Graph<T>& g, ModelParams<T>& params, const PaddedIds& src) {
  const std::size_t len = src.length();
  if (len == 0 || src.batch == 0) throw ContractError("encode: empty source sequence");
  const std::size_t d = params.config.d_hidden, batch = src.batch;
  auto table = g.parameter(params.src_embedding);

  std::vector<Expr<T>> inputs;
  inputs.reserve(len);
  for (std::size_t t = 0; t < len; ++t) inputs.push_back(lookup(table, src.ids[t]));

  // Padded columns carry their state through unchanged.
  auto run = [&](GruParams<T>& cell, Expr<T> h, std::size_t t) {
    auto next = gru_step(g, cell, inputs[t], h);
    return src.column_full(t) ? next : select_columns(src.mask[t], next, h);
  };

  const auto zeros = g.input(Tensor<T>(Shape{d, batch}));
  std::vector<Expr<T>> fwd(len), bwd(len);
  Expr<T> h = zeros;
  for (std::size_t t = 0; t < len; ++t) fwd[t] = h = run(params.enc_fwd, h, t);
  h = zeros;
  for (std::size_t t = len; t-- > 0;) bwd[t] = h = run(params.enc_bwd, h, t);

  EncoderOutput<T> out;
  out.batch = batch;
  auto proj = g.parameter(params.attention.encoder_proj);
  for (std::size_t t = 0; t < len; ++t) {
    const Expr<T> halves[] = {bwd[t], fwd[t]};
    out.states.push_back(concat_rows<T>(halves));
    out.keys.push_back(matmul(proj, out.states.back()));
  }
  const Expr<T> summary_parts[] = {bwd.front(), fwd.back()};
  auto summary = concat_rows<T>(summary_parts);
  out.initial_state = ad::tanh(matmul(g.parameter(params.init_weight), summary) + g.parameter(params.init_bias));
  out.attention_mask.resize(len * batch);
  for (std::size_t t = 0; t < len; ++t)
    std::copy(src.mask[t].begin(), src.mask[t].end(), out.attention_mask.begin() + t * batch);
  return out;
}

template <class T>
Expr<T> attention_scores(Graph<T>& g, AttentionBank<T>& bank, AttentionEntry<T>& entry, Expr<T> query,
                         const EncoderOutput<T>& enc, Expr<T> prev_embedding) {
  if (enc.length() == 0) throw ContractError("attention over an empty source");
  auto query_part = matmul(g.parameter(entry.weight), query) + matmul(g.parameter(bank.embedding_proj), prev_embedding) +
                    g.parameter(entry.bias);
  auto v = g.parameter(bank.score);
  std::vector<Expr<T>> energies;
  energies.reserve(enc.length());
  for (const auto& key : enc.keys) energies.push_back(matmul(v, ad::tanh(key + query_part)));
  auto stacked = concat_rows<T>(energies);
  const bool any_pad = std::find(enc.attention_mask.begin(), enc.attention_mask.end(), 0) != enc.attention_mask.end();
  return any_pad ? softmax(stacked, enc.attention_mask) : softmax(stacked);
}

template <class T>
Expr<T> context_vector(Expr<T> alpha, const std::vector<Expr<T>>& states) {
  if (states.empty() || alpha.value().rows() != states.size())
    throw DimensionError("context_vector: " + std::to_string(alpha.value().rows()) + " weights for " +
                         std::to_string(states.size()) + " states");
  Expr<T> total = mul_columns(states[0], pick_row(alpha, 0));
  for (std::size_t i = 1; i < states.size(); ++i) total = total + mul_columns(states[i], pick_row(alpha, i));
  return total;
}

template <class T>
StepOutput<T> decoder_step(Graph<T>& g, ModelParams<T>& params, const TaskKey& key, Expr<T> s_prev,
                           const std::vector<int>& prev_ids, const EncoderOutput<T>& enc) {
  // const_cast: selection never mutates the bank, and the entry's parameters
  // are registered in the graph like any other.
  auto& entry = const_cast<AttentionEntry<T>&>(select_attention_params(params.attention, key));
  if (s_prev.value().rows() != params.config.d_hidden)
    throw DimensionError("decoder_step: state shape [" + s_prev.shape().str() + "]");
  auto y = lookup(g.parameter(params.tgt_embedding), prev_ids);
  auto intermediate = gru_step(g, params.dec_block1, y, s_prev);
  auto query = params.config.attention_query == AttentionQuery::Intermediate ? intermediate : s_prev;
  auto alpha = attention_scores(g, params.attention, entry, query, enc, y);
  auto context = context_vector(alpha, enc.states);
  auto state = gru_step(g, params.dec_block2, context, intermediate);
  auto hidden = ad::tanh(matmul(g.parameter(params.out_state), state) + matmul(g.parameter(params.out_embedding), y) +
                         matmul(g.parameter(params.out_context), context) + g.parameter(params.out_bias));
  auto logits = matmul(g.parameter(params.vocab_weight), hidden) + g.parameter(params.vocab_bias);
  return {state, logits, alpha};
}

#define TSNMT_INSTANTIATE(T)                                                                                    \
  template Expr<T> gru_step(Graph<T>&, GruParams<T>&, Expr<T>, Expr<T>);                                        \
  template EncoderOutput<T> encode(Graph<T>&, ModelParams<T>&, const PaddedIds&);                               \
  template Expr<T> attention_scores(Graph<T>&, AttentionBank<T>&, AttentionEntry<T>&, Expr<T>,                  \
                                    const EncoderOutput<T>&, Expr<T>);                                          \
  template Expr<T> context_vector(Expr<T>, const std::vector<Expr<T>>&);                                        \
  template StepOutput<T> decoder_step(Graph<T>&, ModelParams<T>&, const TaskKey&, Expr<T>, const std::vector<int>&, \
                                      const EncoderOutput<T>&);

TSNMT_INSTANTIATE(float)
TSNMT_INSTANTIATE(double)

#undef TSNMT_INSTANTIATE

}  // namespace tsnmt
