#include "tsnmt/model/task_key.h"

#include <algorithm>
#include <set>

#include "tsnmt/errors.h"

namespace tsnmt {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Shared: return "shared";
    case Variant::Target: return "target";
    case Variant::Source: return "source";
    case Variant::Paired: return "paired";
  }
  return "?";
}

Variant parse_variant(const std::string& text) {
  if (text == "shared") return Variant::Shared;
  if (text == "target" || text == "target-specific") return Variant::Target;
  if (text == "source" || text == "source-specific") return Variant::Source;
  if (text == "paired") return Variant::Paired;
  throw ConfigError("unknown attention variant '" + text + "'");
}

Direction Direction::parse(const std::string& text) {
  const auto dash = text.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == text.size() || text.find('-', dash + 1) != std::string::npos)
    throw ConfigError("malformed direction '" + text + "', expected SRC-TGT");
  return {text.substr(0, dash), text.substr(dash + 1)};
}

TaskKey TaskKey::pair(std::string src, std::string tgt) {
  if (src == tgt) throw ConfigError("paired task key needs distinct languages, got " + src);
  return TaskKey(Kind::Pair, std::move(src), std::move(tgt));
}

TaskKey TaskKey::for_direction(Variant variant, const Direction& dir) {
  switch (variant) {
    case Variant::Shared: return shared();
    case Variant::Target: return target(dir.tgt);
    case Variant::Source: return source(dir.src);
    case Variant::Paired: return pair(dir.src, dir.tgt);
  }
  return shared();
}

std::string TaskKey::str() const {
  switch (kind_) {
    case Kind::Shared: return "shared";
    case Kind::Target: return "target:" + tgt_;
    case Kind::Source: return "source:" + src_;
    case Kind::Pair: return "pair:" + src_ + ":" + tgt_;
  }
  return "?";
}

TaskKey TaskKey::parse(const std::string& text) {
  if (text == "shared") return shared();
  auto rest = [&](const std::string& prefix) { return text.substr(prefix.size()); };
  if (text.starts_with("target:") && text.size() > 7) return target(rest("target:"));
  if (text.starts_with("source:") && text.size() > 7) return source(rest("source:"));
  if (text.starts_with("pair:")) {
    const std::string r = rest("pair:");
    const auto colon = r.find(':');
    if (colon != std::string::npos && colon > 0 && colon + 1 < r.size()) return pair(r.substr(0, colon), r.substr(colon + 1));
  }
  throw ParseError("malformed task key '" + text + "'");
}

std::vector<TaskKey> bank_keys(Variant variant, const std::vector<std::string>& languages,
                               const std::vector<Direction>& trained_directions) {
  std::set<TaskKey> keys;
  switch (variant) {
    case Variant::Shared:
      keys.insert(TaskKey::shared());
      break;
    case Variant::Target:
      for (const auto& l : languages) keys.insert(TaskKey::target(l));
      break;
    case Variant::Source:
      for (const auto& l : languages) keys.insert(TaskKey::source(l));
      break;
    case Variant::Paired:
      for (const auto& d : trained_directions) keys.insert(TaskKey::pair(d.src, d.tgt));
      break;
  }
  return {keys.begin(), keys.end()};
}

}  // namespace tsnmt
