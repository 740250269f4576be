#include "tsnmt/corpus/task_tokens.h"

#include <algorithm>

#include "tsnmt/errors.h"

namespace tsnmt::corpus {

namespace {

void require_language(const std::vector<std::string>& languages, const std::string& lang) {
  if (std::find(languages.begin(), languages.end(), lang) == languages.end())
    throw ConfigError("language '" + lang + "' is not in the configured language set");
}

// "<ToEn>" with prefix "To" -> "En" if En is configured.
bool match_lang_token(const std::string& tok, const std::string& prefix, const std::vector<std::string>& languages,
                      std::string& lang) {
  if (tok.size() < prefix.size() + 3 || tok.front() != '<' || tok.back() != '>') return false;
  if (tok.compare(1, prefix.size(), prefix) != 0) return false;
  lang = tok.substr(1 + prefix.size(), tok.size() - prefix.size() - 2);
  return std::find(languages.begin(), languages.end(), lang) != languages.end();
}

bool match_pair_token(const std::string& tok, const std::vector<std::string>& languages, std::string& src, std::string& tgt) {
  if (tok.size() < 4 || tok.front() != '<' || tok.back() != '>') return false;
  const std::string body = tok.substr(1, tok.size() - 2);
  for (const auto& s : languages) {
    if (!body.starts_with(s)) continue;
    const std::string rest = body.substr(s.size());
    if (rest != s && std::find(languages.begin(), languages.end(), rest) != languages.end()) {
      src = s;
      tgt = rest;
      return true;
    }
  }
  return false;
}

}  // namespace

std::string target_token(const std::string& lang) { return "<To" + lang + ">"; }
std::string source_token(const std::string& lang) { return "<From" + lang + ">"; }
std::string pair_token(const std::string& src, const std::string& tgt) { return "<" + src + tgt + ">"; }

std::vector<std::string> all_task_tokens(const std::vector<std::string>& languages) {
  std::vector<std::string> out;
  for (const auto& l : languages) out.push_back(target_token(l));
  for (const auto& l : languages) out.push_back(source_token(l));
  for (const auto& s : languages)
    for (const auto& t : languages)
      if (s != t) out.push_back(pair_token(s, t));
  return out;
}

std::vector<std::string> augment_task_tokens(Variant variant, const Direction& dir, const std::vector<std::string>& tokens,
                                             const std::vector<std::string>& languages) {
  require_language(languages, dir.src);
  require_language(languages, dir.tgt);
  std::vector<std::string> out;
  out.reserve(tokens.size() + 3);
  std::string marker;
  switch (variant) {
    case Variant::Shared:
    case Variant::Target:
      marker = target_token(dir.tgt);
      break;
    case Variant::Source:
      out.push_back(source_token(dir.src));
      marker = target_token(dir.tgt);
      break;
    case Variant::Paired:
      if (dir.src == dir.tgt) throw ConfigError("paired variant needs distinct languages, got " + dir.str());
      marker = pair_token(dir.src, dir.tgt);
      break;
  }
  out.push_back(marker);
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.push_back(marker);
  return out;
}

std::pair<TaskKey, std::vector<std::string>> strip_attention_selector(Variant variant, const std::vector<std::string>& tokens,
                                                                      const std::vector<std::string>& languages) {
  auto fail = [](const std::string& what, const std::string& tok) -> ParseError {
    return ParseError("expected " + what + " but found '" + tok + "'");
  };
  const std::string first = tokens.empty() ? std::string("<end of sentence>") : tokens.front();
  std::string lang, src, tgt;
  switch (variant) {
    case Variant::Shared:
      if (!match_lang_token(first, "To", languages, lang)) throw fail("target task token", first);
      return {TaskKey::shared(), tokens};
    case Variant::Target:
      if (!match_lang_token(first, "To", languages, lang)) throw fail("target task token", first);
      return {TaskKey::target(lang), tokens};
    case Variant::Source: {
      if (!match_lang_token(first, "From", languages, lang)) throw fail("source selector token", first);
      const std::string second = tokens.size() > 1 ? tokens[1] : std::string("<end of sentence>");
      std::string to;
      if (!match_lang_token(second, "To", languages, to)) throw fail("target task token", second);
      return {TaskKey::source(lang), std::vector<std::string>(tokens.begin() + 1, tokens.end())};
    }
    case Variant::Paired:
      if (!match_pair_token(first, languages, src, tgt)) throw fail("language-pair task token", first);
      return {TaskKey::pair(src, tgt), tokens};
  }
  throw ConfigError("unhandled variant");
}

}  // namespace tsnmt::corpus
