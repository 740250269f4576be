#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tsnmt::corpus {

// Whitespace split; each of . , : ; ! ? becomes a token of its own.
std::vector<std::string> tokenize(std::string_view line);

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");
std::vector<std::string> split_whitespace(std::string_view line);

// Joins with spaces, reattaching punctuation tokens to the word before them.
std::string detokenize(const std::vector<std::string>& tokens);

}  // namespace tsnmt::corpus
