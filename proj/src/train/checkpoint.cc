#include "tsnmt/train/checkpoint.h"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tsnmt/errors.h"

namespace tsnmt::train {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint payload is written in native little-endian order");

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw CheckpointManifestError("bad number '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw CheckpointManifestError("bad integer '" + s + "'");
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto comma = s.find(',', start);
    out.push_back(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct TensorRef {
  std::string name;
  const Tensor<float>* tensor;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const auto& cfg = ckpt.params.config;
  std::ostringstream h;
  h << kCheckpointMagic << '\n';
  h << "config\td_emb\t" << cfg.d_emb << '\n';
  h << "config\td_hidden\t" << cfg.d_hidden << '\n';
  h << "config\tsrc_vocab\t" << cfg.src_vocab << '\n';
  h << "config\ttgt_vocab\t" << cfg.tgt_vocab << '\n';
  h << "config\tvariant\t" << variant_name(cfg.variant) << '\n';
  h << "config\tattention_query\t" << attention_query_name(cfg.attention_query) << '\n';
  h << "config\tlanguages\t" << join_list(cfg.languages) << '\n';
  std::vector<std::string> dirs;
  for (const auto& d : cfg.trained_directions) dirs.push_back(d.str());
  h << "config\ttrained_directions\t" << join_list(dirs) << '\n';
  for (const auto& [key, entry] : ckpt.params.attention.entries) h << "task\t" << key.str() << '\n';
  for (const auto& [k, v] : ckpt.metadata) {
    if (k.find_first_of("\t\n") != std::string::npos || v.find_first_of("\t\n") != std::string::npos)
      throw ContractError("checkpoint metadata may not contain tabs or newlines");
    h << "meta\t" << k << '\t' << v << '\n';
  }
  for (const auto& t : ckpt.src_vocab.tokens()) h << "srcvocab\t" << t << '\n';
  for (const auto& t : ckpt.tgt_vocab.tokens()) h << "tgtvocab\t" << t << '\n';
  const auto& ac = ckpt.adam.config();
  h << "adam\tlearning_rate\t" << format_double(ac.learning_rate) << '\n';
  h << "adam\tbeta1\t" << format_double(ac.beta1) << '\n';
  h << "adam\tbeta2\t" << format_double(ac.beta2) << '\n';
  h << "adam\tepsilon\t" << format_double(ac.epsilon) << '\n';
  h << "adam\tstep\t" << ckpt.adam.step() << '\n';

  std::vector<TensorRef> tensors;
  std::vector<std::string> names;
  ckpt.params.visit([&](const Parameter<float>& p) {
    tensors.push_back({p.name, &p.value});
    names.push_back(p.name);
  });
  const auto& m = ckpt.adam.first_moments();
  const auto& v = ckpt.adam.second_moments();
  if (!m.empty() && m.size() != names.size()) throw ContractError("Adam state does not match the parameter list");
  for (std::size_t i = 0; i < m.size(); ++i) tensors.push_back({"adam.m." + names[i], &m[i]});
  for (std::size_t i = 0; i < v.size(); ++i) tensors.push_back({"adam.v." + names[i], &v[i]});

  std::size_t offset = 0;
  for (const auto& t : tensors) {
    h << "tensor\t" << t.name << '\t' << t.tensor->shape().str() << '\t' << offset << '\n';
    offset += t.tensor->size() * sizeof(float);
  }
  h << "payload\t" << offset << '\n';
  std::string out = h.str();
  const std::size_t header = out.size();
  out.resize(header + offset);
  std::size_t pos = header;
  for (const auto& t : tensors) {
    std::memcpy(out.data() + pos, t.tensor->data(), t.tensor->size() * sizeof(float));
    pos += t.tensor->size() * sizeof(float);
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < kCheckpointMagic.size() + 1 || bytes.compare(0, kCheckpointMagic.size(), kCheckpointMagic) != 0 ||
      bytes[kCheckpointMagic.size()] != '\n')
    throw CheckpointVersionError("not a " + std::string(kCheckpointMagic) + " checkpoint (bad magic)");

  ModelConfig cfg;
  std::vector<std::string> task_lines, src_tokens, tgt_tokens;
  std::map<std::string, std::string> metadata;
  AdamConfig adam_cfg;
  std::uint64_t adam_step = 0;
  struct Entry {
    std::string name;
    ad::Shape shape;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  std::size_t payload_size = 0;
  std::size_t pos = kCheckpointMagic.size() + 1;
  bool have_payload = false;
  while (!have_payload) {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw CheckpointTruncatedError("checkpoint manifest ends before the payload line");
    const auto f = split_tabs(bytes.substr(pos, nl - pos));
    pos = nl + 1;
    const std::string& kind = f[0];
    auto need = [&](std::size_t n) {
      if (f.size() != n) throw CheckpointManifestError("malformed '" + kind + "' manifest line");
    };
    if (kind == "config") {
      need(3);
      const auto& k = f[1];
      const auto& val = f[2];
      if (k == "d_emb") cfg.d_emb = parse_uint(val);
      else if (k == "d_hidden") cfg.d_hidden = parse_uint(val);
      else if (k == "src_vocab") cfg.src_vocab = parse_uint(val);
      else if (k == "tgt_vocab") cfg.tgt_vocab = parse_uint(val);
      else if (k == "variant") cfg.variant = parse_variant(val);
      else if (k == "attention_query") cfg.attention_query = parse_attention_query(val);
      else if (k == "languages") cfg.languages = split_list(val);
      else if (k == "trained_directions") {
        for (const auto& d : split_list(val)) cfg.trained_directions.push_back(Direction::parse(d));
      } else throw CheckpointManifestError("unknown config key '" + k + "'");
    } else if (kind == "task") {
      need(2);
      task_lines.push_back(f[1]);
    } else if (kind == "meta") {
      need(3);
      metadata[f[1]] = f[2];
    } else if (kind == "srcvocab") {
      need(2);
      src_tokens.push_back(f[1]);
    } else if (kind == "tgtvocab") {
      need(2);
      tgt_tokens.push_back(f[1]);
    } else if (kind == "adam") {
      need(3);
      if (f[1] == "learning_rate") adam_cfg.learning_rate = parse_double(f[2]);
      else if (f[1] == "beta1") adam_cfg.beta1 = parse_double(f[2]);
      else if (f[1] == "beta2") adam_cfg.beta2 = parse_double(f[2]);
      else if (f[1] == "epsilon") adam_cfg.epsilon = parse_double(f[2]);
      else if (f[1] == "step") adam_step = parse_uint(f[2]);
      else throw CheckpointManifestError("unknown adam key '" + f[1] + "'");
    } else if (kind == "tensor") {
      need(4);
      try {
        entries.push_back({f[1], ad::Shape::parse(f[2]), parse_uint(f[3])});
      } catch (const DimensionError& e) {
        throw CheckpointManifestError(e.what());
      }
    } else if (kind == "payload") {
      need(2);
      payload_size = parse_uint(f[1]);
      have_payload = true;
    } else {
      throw CheckpointManifestError("unknown manifest line '" + kind + "'");
    }
  }
  const std::size_t payload_start = pos;
  if (bytes.size() < payload_start + payload_size)
    throw CheckpointTruncatedError("checkpoint payload has " + std::to_string(bytes.size() - payload_start) + " of " +
                                   std::to_string(payload_size) + " bytes");
  if (bytes.size() != payload_start + payload_size) throw CheckpointManifestError("trailing bytes after checkpoint payload");

  Checkpoint ckpt;
  try {
    ckpt.src_vocab = corpus::Vocab(src_tokens);
    ckpt.tgt_vocab = corpus::Vocab(tgt_tokens);
    ckpt.params = ModelParams<float>(cfg);
  } catch (const Error& e) {
    throw CheckpointManifestError(std::string("inconsistent checkpoint manifest: ") + e.what());
  }
  ckpt.metadata = std::move(metadata);
  if (ckpt.src_vocab.size() != cfg.src_vocab || ckpt.tgt_vocab.size() != cfg.tgt_vocab)
    throw CheckpointManifestError("vocabulary listing disagrees with configured vocabulary sizes");

  std::vector<std::string> keys;
  for (const auto& [key, entry] : ckpt.params.attention.entries) keys.push_back(key.str());
  if (keys != task_lines) throw CheckpointManifestError("task-key listing disagrees with the configured attention bank");

  auto params = ckpt.params.parameters();
  const bool has_moments = entries.size() == 3 * params.size();
  if (entries.size() != params.size() && !has_moments)
    throw CheckpointManifestError("checkpoint lists " + std::to_string(entries.size()) + " tensors for " +
                                  std::to_string(params.size()) + " parameters");
  auto read_into = [&](const Entry& e, const std::string& expected_name, Tensor<float>& dst, const ad::Shape& shape) {
    if (e.name != expected_name) throw CheckpointManifestError("expected tensor '" + expected_name + "', found '" + e.name + "'");
    if (!(e.shape == shape))
      throw CheckpointManifestError("tensor '" + e.name + "' has shape " + e.shape.str() + ", model expects " + shape.str());
    const std::size_t n = shape.size() * sizeof(float);
    if (e.offset + n > payload_size) throw CheckpointManifestError("tensor '" + e.name + "' extends past the payload");
    dst = Tensor<float>(shape);
    std::memcpy(dst.data(), bytes.data() + payload_start + e.offset, n);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    read_into(entries[i], params[i]->name, params[i]->value, params[i]->value.shape());
    params[i]->grad = Tensor<float>(params[i]->value.shape());
  }
  std::vector<Tensor<float>> m, v;
  if (has_moments) {
    m.resize(params.size());
    v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      read_into(entries[params.size() + i], "adam.m." + params[i]->name, m[i], params[i]->value.shape());
      read_into(entries[2 * params.size() + i], "adam.v." + params[i]->name, v[i], params[i]->value.shape());
    }
  }
  ckpt.adam.restore(adam_cfg, adam_step, std::move(m), std::move(v));
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace tsnmt::train
