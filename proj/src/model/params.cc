#include "tsnmt/model/params.h"

#include "tsnmt/errors.h"
#include "tsnmt/random.h"

namespace tsnmt {

const char* attention_query_name(AttentionQuery q) { return q == AttentionQuery::Prev ? "prev" : "intermediate"; }

AttentionQuery parse_attention_query(const std::string& text) {
  if (text == "prev") return AttentionQuery::Prev;
  if (text == "intermediate") return AttentionQuery::Intermediate;
  throw ConfigError("unknown attention query '" + text + "', expected prev or intermediate");
}

template <class T>
GruParams<T>::GruParams(const std::string& prefix, std::size_t d_in, std::size_t d)
    : w_z(prefix + ".W_z", {d, d_in}),
      w_r(prefix + ".W_r", {d, d_in}),
      w_h(prefix + ".W_h", {d, d_in}),
      u_z(prefix + ".U_z", {d, d}),
      u_r(prefix + ".U_r", {d, d}),
      u_h(prefix + ".U_h", {d, d}),
      b_z(prefix + ".b_z", {d}),
      b_r(prefix + ".b_r", {d}),
      b_h(prefix + ".b_h", {d}) {}

template <class T>
ModelParams<T>::ModelParams(ModelConfig cfg) : config(std::move(cfg)) {
  const std::size_t e = config.d_emb, d = config.d_hidden;
  if (e == 0 || d == 0 || config.src_vocab == 0 || config.tgt_vocab == 0)
    throw ConfigError("model dimensions and vocabulary sizes must be positive");
  src_embedding = Parameter<T>("src_embedding", {config.src_vocab, e});
  tgt_embedding = Parameter<T>("tgt_embedding", {config.tgt_vocab, e});
  enc_fwd = GruParams<T>("enc_fwd", e, d);
  enc_bwd = GruParams<T>("enc_bwd", e, d);
  dec_block1 = GruParams<T>("dec_block1", e, d);
  dec_block2 = GruParams<T>("dec_block2", 2 * d, d);
  attention.variant = config.variant;
  attention.encoder_proj = Parameter<T>("attention.U", {d, 2 * d});
  attention.embedding_proj = Parameter<T>("attention.V", {d, e});
  attention.score = Parameter<T>("attention.v", {1, d});
  const auto keys = bank_keys(config.variant, config.languages, config.trained_directions);
  if (keys.empty()) throw ConfigError(std::string("no attention entries for variant ") + variant_name(config.variant));
  for (const auto& k : keys) {
    AttentionEntry<T> entry{Parameter<T>("attention.bank[" + k.str() + "].W", {d, d}),
                            Parameter<T>("attention.bank[" + k.str() + "].b", {d})};
    attention.entries.emplace(k, std::move(entry));
  }
  out_state = Parameter<T>("out.W_s", {d, d});
  out_embedding = Parameter<T>("out.W_y", {d, e});
  out_context = Parameter<T>("out.W_H", {d, 2 * d});
  out_bias = Parameter<T>("out.b", {d});
  vocab_weight = Parameter<T>("vocab.W", {config.tgt_vocab, d});
  vocab_bias = Parameter<T>("vocab.b", {config.tgt_vocab});
  init_weight = Parameter<T>("init.W", {d, 2 * d});
  init_bias = Parameter<T>("init.b", {d});
}

template <class T>
void ModelParams<T>::visit(const std::function<void(Parameter<T>&)>& f) {
  f(src_embedding);
  f(tgt_embedding);
  enc_fwd.visit(f);
  enc_bwd.visit(f);
  dec_block1.visit(f);
  dec_block2.visit(f);
  f(attention.encoder_proj);
  f(attention.embedding_proj);
  f(attention.score);
  for (auto& [key, entry] : attention.entries) {
    f(entry.weight);
    f(entry.bias);
  }
  f(out_state);
  f(out_embedding);
  f(out_context);
  f(out_bias);
  f(vocab_weight);
  f(vocab_bias);
  f(init_weight);
  f(init_bias);
}

template <class T>
void ModelParams<T>::visit(const std::function<void(const Parameter<T>&)>& f) const {
  const_cast<ModelParams*>(this)->visit([&](Parameter<T>& p) { f(p); });
}

template <class T>
std::vector<Parameter<T>*> ModelParams<T>::parameters() {
  std::vector<Parameter<T>*> out;
  visit([&](Parameter<T>& p) { out.push_back(&p); });
  return out;
}

template <class T>
void ModelParams<T>::initialize(std::uint64_t seed, double range) {
  // Each tensor draws from a stream keyed by its name, so parameters common to
  // two variants start out identical. Bank entries are keyed by role only:
  // every task starts from the same attention weights.
  auto init = [&](Parameter<T>& p, std::string_view tag) {
    if (p.value.shape().rank() == 1) {
      p.value.fill(T(0));
    } else {
      Rng rng(derive_seed(seed, tag));
      for (auto& v : p.value.values()) v = static_cast<T>(rng.uniform(-range, range));
    }
    p.grad = Tensor<T>(p.value.shape());
  };
  visit([&](Parameter<T>& p) { init(p, p.name); });
  for (auto& [key, entry] : attention.entries) {
    init(entry.weight, "attention.bank.W");
    init(entry.bias, "attention.bank.b");
  }
}

template <class T>
void ModelParams<T>::zero_grad() {
  visit([](Parameter<T>& p) { p.zero_grad(); });
}

template <class T>
template <class U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out(config);
  auto dst = out.parameters();
  std::size_t i = 0;
  visit([&](const Parameter<T>& p) {
    dst[i]->value = p.value.template cast<U>();
    dst[i]->grad = p.grad.template cast<U>();
    ++i;
  });
  return out;
}

template <class T>
const AttentionEntry<T>& select_attention_params(const AttentionBank<T>& bank, const TaskKey& key) {
  if (bank.variant == Variant::Shared) return bank.entries.begin()->second;
  auto it = bank.entries.find(key);
  if (it == bank.entries.end())
    throw UnknownTaskError(std::string("no attention parameters for task ") + key.str() + " in " +
                           variant_name(bank.variant) + " bank");
  return it->second;
}

template <class T>
ParameterCount count_parameters(const ModelParams<T>& params) {
  ParameterCount c;
  auto add = [&](const std::string& group, const Parameter<T>& p) {
    c.groups[group] += p.size();
    c.total += p.size();
  };
  auto add_gru = [&](const std::string& group, const GruParams<T>& g) {
    const_cast<GruParams<T>&>(g).visit([&](Parameter<T>& p) { add(group, p); });
  };
  add("embeddings", params.src_embedding);
  add("embeddings", params.tgt_embedding);
  add_gru("encoder", params.enc_fwd);
  add_gru("encoder", params.enc_bwd);
  add_gru("decoder", params.dec_block1);
  add_gru("decoder", params.dec_block2);
  add("attention-shared", params.attention.encoder_proj);
  add("attention-shared", params.attention.embedding_proj);
  add("attention-shared", params.attention.score);
  for (const auto& [key, entry] : params.attention.entries) {
    add("attention-bank", entry.weight);
    add("attention-bank", entry.bias);
  }
  for (const auto* p : {&params.out_state, &params.out_embedding, &params.out_context, &params.out_bias,
                        &params.vocab_weight, &params.vocab_bias})
    add("output", *p);
  add("init", params.init_weight);
  add("init", params.init_bias);
  const std::size_t d = params.config.d_hidden;
  c.per_task_attention = d * d + d;
  return c;
}

template struct GruParams<float>;
template struct GruParams<double>;
template class ModelParams<float>;
template class ModelParams<double>;
template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template ModelParams<double> ModelParams<double>::cast<double>() const;
template const AttentionEntry<float>& select_attention_params(const AttentionBank<float>&, const TaskKey&);
template const AttentionEntry<double>& select_attention_params(const AttentionBank<double>&, const TaskKey&);
template ParameterCount count_parameters(const ModelParams<float>&);
template ParameterCount count_parameters(const ModelParams<double>&);

}  // namespace tsnmt
