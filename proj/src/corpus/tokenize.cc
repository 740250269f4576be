#include "tsnmt/corpus/tokenize.h"

namespace tsnmt::corpus {

namespace {
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_punct(char c) {
  switch (c) {
    case '.': case ',': case ':': case ';': case '!': case '?': return true;
    default: return false;
  }
}
}  // namespace

std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  for (const auto& word : split_whitespace(line)) {
    std::string current;
    for (char c : word) {
      if (is_punct(c)) {
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
        out.emplace_back(1, c);
      } else {
        current += c;
      }
    }
    if (!current.empty()) out.push_back(std::move(current));
  }
  return out;
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty() && !(t.size() == 1 && is_punct(t[0]))) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace tsnmt::corpus
