#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tsnmt/model/task_key.h"

namespace tsnmt::corpus {

std::string target_token(const std::string& lang);                         // <ToEn>
std::string source_token(const std::string& lang);                         // <FromFr>
std::string pair_token(const std::string& src, const std::string& tgt);    // <FrEn>

// Every task token the configured languages can produce, across variants.
std::vector<std::string> all_task_tokens(const std::vector<std::string>& languages);

// Adds prefix and suffix task tokens to a source sentence:
//   shared, target   <ToT> w... <ToT>
//   source           <FromS> <ToT> w... <ToT>
//   paired           <ST> w... <ST>
// The shared variant uses the target-token grammar, so shared and
// target-specific models see identical input.
std::vector<std::string> augment_task_tokens(Variant variant, const Direction& dir, const std::vector<std::string>& tokens,
                                             const std::vector<std::string>& languages);

// Reads the attention key from the leading task tokens. For the source
// variant the selector token is removed, leaving exactly the target-variant
// sequence; other variants pass tokens through unchanged.
std::pair<TaskKey, std::vector<std::string>> strip_attention_selector(Variant variant, const std::vector<std::string>& tokens,
                                                                      const std::vector<std::string>& languages);

}  // namespace tsnmt::corpus
