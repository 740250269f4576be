#include "tsnmt/app/config.h"

#include <fstream>
#include <sstream>

#include "tsnmt/errors.h"

namespace tsnmt::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class F>
auto convert(const std::string& key, const std::string& value, F&& f) {
  try {
    std::size_t used = 0;
    auto v = f(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("bad value for " + key + ": '" + value + "'");
  }
}

}  // namespace

std::string normalize_key(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return key;
}

Config Config::parse(const std::string& text, const std::set<std::string>& allowed) {
  Config c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const auto key = normalize_key(trim(line.substr(0, eq)));
    if (!allowed.count(key)) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path, const std::set<std::string>& allowed) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), allowed);
}

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (!v->empty() && (*v)[0] == '-') throw ConfigError("bad value for " + key + ": '" + *v + "'");
  return convert(key, *v, [](const std::string& s, std::size_t* used) { return std::stoul(s, used); });
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (!v->empty() && (*v)[0] == '-') throw ConfigError("bad value for " + key + ": '" + *v + "'");
  return convert(key, *v, [](const std::string& s, std::size_t* used) { return std::stoull(s, used); });
}

double Config::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  return convert(key, *v, [](const std::string& s, std::size_t* used) { return std::stod(s, used); });
}

}  // namespace tsnmt::app
