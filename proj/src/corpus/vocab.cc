#include "tsnmt/corpus/vocab.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tsnmt/errors.h"

namespace tsnmt::corpus {

Vocab::Vocab() : Vocab(std::vector<std::string>{kBosToken, kEosToken, kUnkToken}) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 3 || tokens_[kBos] != kBosToken || tokens_[kEos] != kEosToken || tokens_[kUnk] != kUnkToken)
    throw ParseError("vocabulary must begin with <s>, </s>, <unk>");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty() || tokens_[i].find_first_of(" \t\n\r") != std::string::npos)
      throw ParseError("vocabulary token " + std::to_string(i) + " is empty or contains whitespace");
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw ParseError("duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw IndexError("vocabulary id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

std::string Vocab::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) out += tokens_[i] + '\t' + std::to_string(i) + '\n';
  return out;
}

Vocab Vocab::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> tokens;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("vocabulary line without tab: '" + line + "'");
    const std::string id = line.substr(tab + 1);
    if (id != std::to_string(tokens.size()))
      throw ParseError("vocabulary ids must be consecutive from 0; got '" + id + "' at position " + std::to_string(tokens.size()));
    tokens.push_back(line.substr(0, tab));
  }
  return Vocab(std::move(tokens));
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << serialize();
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

Vocab build_vocab(const std::map<std::string, std::size_t>& counts, const std::vector<std::string>& reserved) {
  std::vector<std::string> tokens{Vocab::kBosToken, Vocab::kEosToken, Vocab::kUnkToken};
  for (const auto& r : reserved)
    if (std::find(tokens.begin(), tokens.end(), r) == tokens.end()) tokens.push_back(r);
  std::vector<std::pair<std::string, std::size_t>> observed;
  for (const auto& [tok, n] : counts)
    if (std::find(tokens.begin(), tokens.end(), tok) == tokens.end()) observed.emplace_back(tok, n);
  std::stable_sort(observed.begin(), observed.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [tok, n] : observed) tokens.push_back(std::move(tok));
  return Vocab(std::move(tokens));
}

}  // namespace tsnmt::corpus
