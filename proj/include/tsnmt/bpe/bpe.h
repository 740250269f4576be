#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tsnmt::bpe {

inline constexpr std::string_view kContinuation = "@@";

struct MergeRule {
  std::string left;
  std::string right;
  auto operator<=>(const MergeRule&) const = default;
};

// Ordered merge rules. A word starts as its UTF-8 characters with the final
// character flagged end-of-word; the flag is not part of a symbol's identity,
// so (a, b) matches inside and at the end of a word alike.
class BpeModel {
 public:
  static constexpr std::string_view kVersion = "bpe-v1";

  BpeModel() = default;
  explicit BpeModel(std::vector<MergeRule> rules);

  const std::vector<MergeRule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  const std::string& end_of_word() const { return end_of_word_; }

  // Rank of a rule, or npos when absent.
  std::size_t rank(std::string_view left, std::string_view right) const;

  void save(const std::string& path) const;
  static BpeModel load(const std::string& path);
  std::string serialize() const;
  static BpeModel deserialize(std::string_view text);

 private:
  std::vector<MergeRule> rules_;
  std::map<std::pair<std::string, std::string>, std::size_t, std::less<>> ranks_;
  std::string end_of_word_ = "</w>";
};

std::vector<std::string> utf8_characters(std::string_view word);

// Greedy most-frequent-pair learning. Ties go to the lexicographically
// smallest (left, right). Stops after `num_merges` rules or when no adjacent
// pair occurs at least `min_count` times.
BpeModel learn_bpe(const std::map<std::string, std::size_t>& word_counts, std::size_t num_merges,
                   std::size_t min_count = 1);

// Subwords for one word; all but the last carry the "@@" suffix.
std::vector<std::string> apply_bpe(const BpeModel& model, std::string_view word);
std::vector<std::string> apply_bpe_tokens(const BpeModel& model, const std::vector<std::string>& words);

// Joins "@@"-suffixed tokens with their successors. Throws
// MalformedStreamError when the last token still carries the suffix.
std::vector<std::string> decode_bpe(const std::vector<std::string>& tokens);

}  // namespace tsnmt::bpe
