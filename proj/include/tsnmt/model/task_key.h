#pragma once

#include <compare>
#include <string>
#include <vector>

namespace tsnmt {

// Which attention parameter set a sentence uses.
enum class Variant { Shared, Target, Source, Paired };

const char* variant_name(Variant v);
// Accepts "shared", "target", "target-specific", "source", "source-specific",
// "paired".
Variant parse_variant(const std::string& text);

struct Direction {
  std::string src;
  std::string tgt;

  std::string str() const { return src + "-" + tgt; }
  static Direction parse(const std::string& text);
  auto operator<=>(const Direction&) const = default;
};

class TaskKey {
 public:
  enum class Kind { Shared, Target, Source, Pair };

  static TaskKey shared() { return TaskKey(Kind::Shared, "", ""); }
  static TaskKey target(std::string lang) { return TaskKey(Kind::Target, "", std::move(lang)); }
  static TaskKey source(std::string lang) { return TaskKey(Kind::Source, std::move(lang), ""); }
  static TaskKey pair(std::string src, std::string tgt);
  // The key a direction maps to under `variant`.
  static TaskKey for_direction(Variant variant, const Direction& dir);

  Kind kind() const { return kind_; }
  const std::string& src() const { return src_; }
  const std::string& tgt() const { return tgt_; }

  // "shared", "target:En", "source:Fr", "pair:Fr:En"
  std::string str() const;
  static TaskKey parse(const std::string& text);

  auto operator<=>(const TaskKey&) const = default;

 private:
  TaskKey(Kind kind, std::string src, std::string tgt) : kind_(kind), src_(std::move(src)), tgt_(std::move(tgt)) {}
  Kind kind_ = Kind::Shared;
  std::string src_;
  std::string tgt_;
};

// Keys that a bank for `variant` holds, in a canonical order.
std::vector<TaskKey> bank_keys(Variant variant, const std::vector<std::string>& languages,
                               const std::vector<Direction>& trained_directions);

}  // namespace tsnmt
