#pragma once

#include <string>
#include <vector>

namespace tsnmt::eval {

// Soft alignment: rows are source positions, columns target positions.
struct AttentionMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major, rows x cols

  AttentionMatrix() = default;
  AttentionMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  void append_column(const std::vector<double>& column);
};

// Mean over columns of -sum alpha ln alpha, in nats. 0 for an empty matrix.
double attention_entropy(const AttentionMatrix& m);

// Heatmap with one labelled row per source token and one column per target token.
std::string attention_svg(const AttentionMatrix& m, const std::vector<std::string>& src_tokens,
                          const std::vector<std::string>& tgt_tokens);
// "l m" on the first line, then l rows of m values.
std::string attention_text(const AttentionMatrix& m);
AttentionMatrix parse_attention_text(const std::string& text);

// Writes `<path>` (SVG) and `<path minus .svg>.att.txt`.
void export_attention(const AttentionMatrix& m, const std::vector<std::string>& src_tokens,
                      const std::vector<std::string>& tgt_tokens, const std::string& path);

}  // namespace tsnmt::eval
