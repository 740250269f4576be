#include "tsnmt/toy/toy.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "tsnmt/corpus/tokenize.h"
#include "tsnmt/errors.h"
#include "tsnmt/random.h"

namespace tsnmt::toy {

std::string Transform::str() const {
  switch (kind) {
    case Kind::Identity: return "identity";
    case Kind::Reverse: return "reverse";
    case Kind::Rotate: return "rotate" + std::to_string(k);
  }
  return "identity";
}

Transform Transform::parse(const std::string& text) {
  if (text == "identity") return identity();
  if (text == "reverse") return reverse();
  if (text.rfind("rotate", 0) == 0 && text.size() > 6 &&
      std::all_of(text.begin() + 6, text.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return rotate(std::stoul(text.substr(6)));
  throw ConfigError("unknown transform '" + text + "', expected identity, reverse or rotate<k>");
}

std::vector<int> transform_sequence(const Transform& t, const std::vector<int>& seq) {
  switch (t.kind) {
    case Transform::Kind::Identity: return seq;
    case Transform::Kind::Reverse: return {seq.rbegin(), seq.rend()};
    case Transform::Kind::Rotate: {
      if (seq.empty()) throw ContractError("rotate of an empty sequence");
      std::vector<int> out(seq);
      std::rotate(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(t.k % seq.size()), out.end());
      return out;
    }
  }
  return seq;
}

std::vector<int> invert_transform(const Transform& t, const std::vector<int>& seq) {
  if (t.kind != Transform::Kind::Rotate || seq.empty()) return transform_sequence(t, seq);
  return transform_sequence(Transform::rotate(seq.size() - t.k % seq.size()), seq);
}

ToyLanguage::ToyLanguage(std::string code, Transform transform, std::size_t base_vocab, std::uint64_t seed)
    : code_(std::move(code)), transform_(transform) {
  if (code_.empty()) throw ConfigError("empty language code");
  if (base_vocab == 0) throw ConfigError("base vocabulary must be non-empty");
  std::vector<std::size_t> labels(base_vocab);
  std::iota(labels.begin(), labels.end(), 0);
  Rng rng(derive_seed(seed, "toy/relabel/" + code_));
  rng.shuffle(std::span<std::size_t>(labels));
  std::string prefix;
  for (char c : code_) prefix += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (std::size_t i = 0; i < base_vocab; ++i) {
    surface_.push_back(prefix + std::to_string(labels[i]));
    inverse_.emplace(surface_.back(), static_cast<int>(i));
  }
}

int ToyLanguage::base(const std::string& token) const {
  auto it = inverse_.find(token);
  if (it == inverse_.end()) throw VocabularyError("token '" + token + "' is not in language " + code_);
  return it->second;
}

std::vector<std::string> ToyLanguage::realize(const std::vector<int>& base_sentence) const {
  std::vector<std::string> out;
  for (int b : transform_sequence(transform_, base_sentence)) out.push_back(surface(b));
  return out;
}

std::vector<int> ToyLanguage::analyze(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  for (const auto& t : tokens) ids.push_back(base(t));
  return invert_transform(transform_, ids);
}

std::vector<std::string> oracle_translate(const ToyLanguage& src, const ToyLanguage& tgt, const std::vector<std::string>& sentence) {
  return tgt.realize(src.analyze(sentence));
}

std::string oracle_translate(const ToyLanguage& src, const ToyLanguage& tgt, const std::string& sentence) {
  return corpus::join(oracle_translate(src, tgt, corpus::split_whitespace(sentence)));
}

namespace {

bool same_pair(const Direction& a, const Direction& b) {
  return (a.src == b.src && a.tgt == b.tgt) || (a.src == b.tgt && a.tgt == b.src);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

void ToyCorpusSpec::validate() const {
  if (languages.size() < 2) throw ConfigError("toy spec needs at least two languages");
  if (transforms.size() != languages.size())
    throw ConfigError("toy spec lists " + std::to_string(transforms.size()) + " transforms for " +
                      std::to_string(languages.size()) + " languages");
  const std::set<std::string> codes(languages.begin(), languages.end());
  if (codes.size() != languages.size()) throw ConfigError("duplicate language code in toy spec");
  std::set<std::string> prefixes;
  for (const auto& l : languages) {
    std::string p;
    for (char c : l) p += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    prefixes.insert(p);
    if (!std::all_of(l.begin(), l.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); }))
      throw ConfigError("language codes must be alphabetic: '" + l + "'");
  }
  if (prefixes.size() != languages.size()) throw ConfigError("language codes must differ ignoring case");
  if (!codes.count(hub)) throw ConfigError("hub language " + hub + " is not among the languages");
  if (trained.empty()) throw ConfigError("toy spec has no trained pairs");
  auto check_pair = [&](const Direction& d) {
    if (!codes.count(d.src) || !codes.count(d.tgt) || d.src == d.tgt) throw ConfigError("bad language pair " + d.str());
  };
  for (const auto& d : trained) {
    check_pair(d);
    if (d.src != hub && d.tgt != hub) throw ConfigError("trained pair " + d.str() + " does not include the hub " + hub);
  }
  for (const auto& z : zero_shot) {
    check_pair(z);
    for (const auto& d : trained)
      if (same_pair(z, d)) throw ConfigError("pair " + z.str() + " is both trained and zero-shot");
  }
  if (min_length == 0 || min_length > max_length) throw ConfigError("bad sentence length range");
  if (base_vocab == 0) throw ConfigError("base vocabulary must be non-empty");
  if (sentences_per_pair == 0) throw ConfigError("sentences per pair must be positive");
}

ToyCorpusSpec ToyCorpusSpec::parse(const std::string& text) {
  ToyCorpusSpec s;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto pairs = [](const std::string& v) {
    std::vector<Direction> out;
    for (const auto& p : split_commas(v)) out.push_back(Direction::parse(p));
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (key == "languages") s.languages = split_commas(value);
      else if (key == "transforms") {
        s.transforms.clear();
        for (const auto& t : split_commas(value)) s.transforms.push_back(Transform::parse(t));
      } else if (key == "hub") s.hub = value;
      else if (key == "trained") s.trained = pairs(value);
      else if (key == "zero_shot") s.zero_shot = pairs(value);
      else if (key == "sentences_per_pair") s.sentences_per_pair = std::stoul(value);
      else if (key == "valid_per_pair") s.valid_per_pair = std::stoul(value);
      else if (key == "test_per_pair") s.test_per_pair = std::stoul(value);
      else if (key == "min_length") s.min_length = std::stoul(value);
      else if (key == "max_length") s.max_length = std::stoul(value);
      else if (key == "base_vocab") s.base_vocab = std::stoul(value);
      else if (key == "seed") s.seed = std::stoull(value);
      else throw ConfigError("unknown toy spec key '" + key + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("line " + std::to_string(lineno) + ": bad value for " + key + ": '" + value + "'");
    }
  }
  s.validate();
  return s;
}

ToyCorpusSpec ToyCorpusSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read toy spec " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ToyCorpusSpec::str() const {
  auto join_dirs = [](const std::vector<Direction>& ds) {
    std::vector<std::string> parts;
    for (const auto& d : ds) parts.push_back(d.str());
    return corpus::join(parts, ",");
  };
  std::vector<std::string> ts;
  for (const auto& t : transforms) ts.push_back(t.str());
  std::ostringstream o;
  o << "languages=" << corpus::join(languages, ",") << "\n"
    << "transforms=" << corpus::join(ts, ",") << "\n"
    << "hub=" << hub << "\n"
    << "trained=" << join_dirs(trained) << "\n"
    << "zero_shot=" << join_dirs(zero_shot) << "\n"
    << "sentences_per_pair=" << sentences_per_pair << "\n"
    << "valid_per_pair=" << valid_per_pair << "\n"
    << "test_per_pair=" << test_per_pair << "\n"
    << "min_length=" << min_length << "\n"
    << "max_length=" << max_length << "\n"
    << "base_vocab=" << base_vocab << "\n"
    << "seed=" << seed << "\n";
  return o.str();
}

std::vector<ToyLanguage> ToyCorpusSpec::build_languages() const {
  std::vector<ToyLanguage> out;
  for (std::size_t i = 0; i < languages.size(); ++i) out.emplace_back(languages[i], transforms[i], base_vocab, seed);
  return out;
}

const ToyLanguage& ToyCorpusSpec::language(const std::vector<ToyLanguage>& langs, const std::string& code) const {
  for (const auto& l : langs)
    if (l.code() == code) return l;
  throw ConfigError("unknown toy language " + code);
}

std::vector<Direction> ToyCorpusSpec::trained_directions() const {
  std::vector<Direction> out;
  for (const auto& d : trained) {
    out.push_back(d);
    out.push_back({d.tgt, d.src});
  }
  return out;
}

ToyCorpus generate_parallel_corpus(const ToyCorpusSpec& spec) {
  spec.validate();
  ToyCorpus out;
  out.languages = spec.build_languages();
  Rng rng(derive_seed(spec.seed, "toy/sentences"));
  std::set<std::vector<int>> used;
  auto draw = [&] {
    for (std::size_t attempt = 0; attempt < 1000000; ++attempt) {
      const std::size_t len = spec.min_length + rng.below(spec.max_length - spec.min_length + 1);
      std::vector<int> s(len);
      for (auto& x : s) x = static_cast<int>(rng.below(spec.base_vocab));
      if (used.insert(s).second) return s;
    }
    throw ConfigError("toy spec cannot supply enough distinct sentences");
  };
  auto make = [&](const Direction& pair, std::size_t n) {
    corpus::PairCorpus c;
    c.pair = pair;
    const auto& a = spec.language(out.languages, pair.src);
    const auto& b = spec.language(out.languages, pair.tgt);
    for (std::size_t i = 0; i < n; ++i) {
      const auto base = draw();
      c.first.push_back(corpus::join(a.realize(base)));
      c.second.push_back(corpus::join(b.realize(base)));
    }
    return c;
  };
  // Splits are drawn in a fixed order so that changing one split's size only
  // shifts the sentences that follow it.
  for (const auto& p : spec.trained) out.test.push_back(make(p, spec.test_per_pair));
  for (const auto& p : spec.zero_shot) out.test.push_back(make(p, spec.test_per_pair));
  for (const auto& p : spec.trained) out.valid.push_back(make(p, spec.valid_per_pair));
  for (const auto& p : spec.trained) out.train.push_back(make(p, spec.sentences_per_pair));
  return out;
}

std::string split_file(const std::string& dir, const std::string& split, const Direction& pair, bool source_side) {
  return (std::filesystem::path(dir) / (split + "." + pair.str() + (source_side ? ".src" : ".tgt"))).string();
}

void write_toy_corpus(const ToyCorpus& c, const ToyCorpusSpec& spec, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& split, const std::vector<corpus::PairCorpus>& pcs) {
    for (const auto& pc : pcs) {
      corpus::write_lines(split_file(dir, split, pc.pair, true), pc.first);
      corpus::write_lines(split_file(dir, split, pc.pair, false), pc.second);
    }
  };
  write("train", c.train);
  write("valid", c.valid);
  write("test", c.test);
  std::ofstream cfg(std::filesystem::path(dir) / "spec.cfg");
  if (!cfg) throw IoError("cannot write spec.cfg in " + dir);
  cfg << spec.str();
}

}  // namespace tsnmt::toy
