#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tsnmt/autodiff/graph.h"
#include "tsnmt/model/task_key.h"

namespace tsnmt {

using ad::Parameter;
using ad::Shape;
using ad::Tensor;

// Which decoder state queries the attention network: the previous state
// s_{t-1}, or the conditional-GRU intermediate state after block 1.
enum class AttentionQuery { Prev, Intermediate };

const char* attention_query_name(AttentionQuery q);
AttentionQuery parse_attention_query(const std::string& text);

struct ModelConfig {
  std::size_t d_emb = 256;
  std::size_t d_hidden = 256;
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  Variant variant = Variant::Shared;
  AttentionQuery attention_query = AttentionQuery::Intermediate;
  std::vector<std::string> languages;
  std::vector<Direction> trained_directions;
};

template <class T>
struct GruParams {
  Parameter<T> w_z, w_r, w_h;  // d x d_in
  Parameter<T> u_z, u_r, u_h;  // d x d
  Parameter<T> b_z, b_r, b_h;  // d

  GruParams() = default;
  GruParams(const std::string& prefix, std::size_t d_in, std::size_t d);

  std::size_t input_size() const { return w_z.value.cols(); }
  std::size_t hidden_size() const { return u_z.value.rows(); }

  template <class F>
  void visit(F&& f) {
    for (auto* p : {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h}) f(*p);
  }
};

// Per-task part of the first attention layer: decoder-state projection and bias.
template <class T>
struct AttentionEntry {
  Parameter<T> weight;  // d x d
  Parameter<T> bias;    // d
};

template <class T>
struct AttentionBank {
  Variant variant = Variant::Shared;
  Parameter<T> encoder_proj;    // d x 2d
  Parameter<T> embedding_proj;  // d x d_emb
  Parameter<T> score;           // 1 x d
  std::map<TaskKey, AttentionEntry<T>> entries;
};

template <class T>
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(ModelConfig config);

  ModelConfig config;

  Parameter<T> src_embedding;  // V_src x d_emb
  Parameter<T> tgt_embedding;  // V_tgt x d_emb
  GruParams<T> enc_fwd, enc_bwd;
  GruParams<T> dec_block1;  // input: previous target embedding
  GruParams<T> dec_block2;  // input: context vector (2d)
  AttentionBank<T> attention;
  Parameter<T> out_state;      // d x d
  Parameter<T> out_embedding;  // d x d_emb
  Parameter<T> out_context;    // d x 2d
  Parameter<T> out_bias;       // d
  Parameter<T> vocab_weight;   // V_tgt x d
  Parameter<T> vocab_bias;     // V_tgt
  Parameter<T> init_weight;    // d x 2d
  Parameter<T> init_bias;      // d

  // Canonical order: embeddings, encoder, decoder, shared attention, bank
  // entries in key order, output layer, initial-state projection.
  void visit(const std::function<void(Parameter<T>&)>& f);
  void visit(const std::function<void(const Parameter<T>&)>& f) const;
  std::vector<Parameter<T>*> parameters();

  // Matrices ~ U(-range, range), biases (rank-1 tensors) zero.
  void initialize(std::uint64_t seed, double range = 0.08);
  void zero_grad();

  template <class U>
  ModelParams<U> cast() const;
};

// A shared bank answers every key with its single entry; other banks throw
// UnknownTaskError for keys they were not built with.
template <class T>
const AttentionEntry<T>& select_attention_params(const AttentionBank<T>& bank, const TaskKey& key);

struct ParameterCount {
  std::size_t total = 0;
  std::map<std::string, std::size_t> groups;
  std::size_t per_task_attention = 0;  // d*d + d
};

template <class T>
ParameterCount count_parameters(const ModelParams<T>& params);

}  // namespace tsnmt
