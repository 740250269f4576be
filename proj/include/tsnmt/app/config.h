#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

namespace tsnmt::app {

// Flat key=value settings. Keys are the long flag names with dashes, e.g.
// "d-hidden"; underscores in config files are accepted and normalized.
class Config {
 public:
  static Config parse(const std::string& text, const std::set<std::string>& allowed);
  static Config load(const std::string& path, const std::set<std::string>& allowed);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string normalize_key(std::string key);

}  // namespace tsnmt::app
