#include "tsnmt/bpe/bpe.h"

#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "tsnmt/errors.h"

namespace tsnmt::bpe {

BpeModel::BpeModel(std::vector<MergeRule> rules) : rules_(std::move(rules)) {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    auto [it, fresh] = ranks_.emplace(std::make_pair(rules_[i].left, rules_[i].right), i);
    if (!fresh) throw ParseError("duplicate merge rule '" + rules_[i].left + " " + rules_[i].right + "'");
  }
}

std::size_t BpeModel::rank(std::string_view left, std::string_view right) const {
  auto it = ranks_.find(std::make_pair(std::string(left), std::string(right)));
  return it == ranks_.end() ? std::string::npos : it->second;
}

std::string BpeModel::serialize() const {
  std::string out(kVersion);
  out += '\n';
  for (const auto& r : rules_) out += r.left + ' ' + r.right + '\n';
  return out;
}

BpeModel BpeModel::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kVersion)
    throw ParseError("BPE model does not start with '" + std::string(kVersion) + "'");
  std::vector<MergeRule> rules;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 == line.size() || line.find(' ', space + 1) != std::string::npos)
      throw ParseError("malformed BPE merge at line " + std::to_string(lineno) + ": '" + line + "'");
    rules.push_back({line.substr(0, space), line.substr(space + 1)});
  }
  return BpeModel(std::move(rules));
}

void BpeModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << serialize();
}

BpeModel BpeModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

std::vector<std::string> utf8_characters(std::string_view word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    const auto c = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    len = std::min(len, word.size() - i);
    out.emplace_back(word.substr(i, len));
    i += len;
  }
  return out;
}

namespace {

using Pair = std::pair<std::string, std::string>;

struct Learner {
  std::vector<std::vector<std::string>> words;
  std::vector<std::size_t> freq;
  std::map<Pair, std::size_t> counts;
  std::map<Pair, std::set<std::size_t>> where;
  // Ordered by count descending, then pair ascending.
  std::set<std::tuple<long long, std::string, std::string>> queue;

  void bump(const Pair& p, long long delta, std::size_t word) {
    auto& c = counts[p];
    if (c > 0) queue.erase({-static_cast<long long>(c), p.first, p.second});
    c = static_cast<std::size_t>(static_cast<long long>(c) + delta);
    if (c > 0) {
      queue.insert({-static_cast<long long>(c), p.first, p.second});
    } else {
      counts.erase(p);
    }
    if (delta > 0) where[p].insert(word);
  }

  void add_word_pairs(std::size_t w, long long sign) {
    const auto& s = words[w];
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      bump({s[i], s[i + 1]}, sign * static_cast<long long>(freq[w]), w);
  }
};

}  // namespace

BpeModel learn_bpe(const std::map<std::string, std::size_t>& word_counts, std::size_t num_merges, std::size_t min_count) {
  Learner L;
  for (const auto& [word, count] : word_counts) {
    if (word.empty() || count == 0) continue;
    L.words.push_back(utf8_characters(word));
    L.freq.push_back(count);
  }
  for (std::size_t w = 0; w < L.words.size(); ++w) L.add_word_pairs(w, +1);

  std::vector<MergeRule> rules;
  while (rules.size() < num_merges && !L.queue.empty()) {
    const auto& [neg_count, left_ref, right_ref] = *L.queue.begin();
    if (static_cast<std::size_t>(-neg_count) < min_count) break;
    const Pair best{left_ref, right_ref};
    rules.push_back({best.first, best.second});
    const std::string merged = best.first + best.second;

    const auto candidates = L.where[best];
    for (std::size_t w : candidates) {
      auto& s = L.words[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < s.size() && !present; ++i) present = s[i] == best.first && s[i + 1] == best.second;
      if (!present) continue;
      L.add_word_pairs(w, -1);
      std::vector<std::string> next;
      next.reserve(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == best.first && s[i + 1] == best.second) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(s[i]);
        }
      }
      s = std::move(next);
      L.add_word_pairs(w, +1);
    }
    L.where.erase(best);
  }
  return BpeModel(std::move(rules));
}

std::vector<std::string> apply_bpe(const BpeModel& model, std::string_view word) {
  std::vector<std::string> symbols = utf8_characters(word);
  while (symbols.size() > 1) {
    std::size_t best_rank = std::string::npos;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i)
      best_rank = std::min(best_rank, model.rank(symbols[i], symbols[i + 1]));
    if (best_rank == std::string::npos) break;
    const auto& rule = model.rules()[best_rank];
    std::vector<std::string> next;
    next.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size() && symbols[i] == rule.left && symbols[i + 1] == rule.right) {
        next.push_back(rule.left + rule.right);
        ++i;
      } else {
        next.push_back(std::move(symbols[i]));
      }
    }
    symbols = std::move(next);
  }
  for (std::size_t i = 0; i + 1 < symbols.size(); ++i) symbols[i] += kContinuation;
  return symbols;
}

std::vector<std::string> apply_bpe_tokens(const BpeModel& model, const std::vector<std::string>& words) {
  std::vector<std::string> out;
  for (const auto& w : words) {
    auto pieces = apply_bpe(model, w);
    out.insert(out.end(), std::make_move_iterator(pieces.begin()), std::make_move_iterator(pieces.end()));
  }
  return out;
}

std::vector<std::string> decode_bpe(const std::vector<std::string>& tokens) {
  std::vector<std::string> words;
  std::string current;
  bool open = false;
  for (const auto& t : tokens) {
    if (t.ends_with(kContinuation)) {
      current += t.substr(0, t.size() - kContinuation.size());
      open = true;
    } else {
      current += t;
      words.push_back(std::move(current));
      current.clear();
      open = false;
    }
  }
  if (open) throw MalformedStreamError("BPE stream ends with a continuation token");
  return words;
}

}  // namespace tsnmt::bpe
