#include "tsnmt/eval/attention.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tsnmt/errors.h"

namespace tsnmt::eval {

void AttentionMatrix::append_column(const std::vector<double>& column) {
  if (cols == 0 && rows == 0) rows = column.size();
  if (column.size() != rows)
    throw ContractError("attention column has " + std::to_string(column.size()) + " entries, matrix has " +
                        std::to_string(rows) + " rows");
  std::vector<double> next(rows * (cols + 1));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) next[r * (cols + 1) + c] = values[r * cols + c];
    next[r * (cols + 1) + cols] = column[r];
  }
  values = std::move(next);
  ++cols;
}

double attention_entropy(const AttentionMatrix& m) {
  if (m.cols == 0) return 0;
  double total = 0;
  for (std::size_t c = 0; c < m.cols; ++c)
    for (std::size_t r = 0; r < m.rows; ++r) {
      const double a = m.at(r, c);
      if (a > 0) total -= a * std::log(a);
    }
  return total / static_cast<double>(m.cols);
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void check_labels(const AttentionMatrix& m, const std::vector<std::string>& src, const std::vector<std::string>& tgt) {
  if (src.size() != m.rows || tgt.size() != m.cols)
    throw ContractError("attention matrix is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) + " but has " +
                        std::to_string(src.size()) + " source and " + std::to_string(tgt.size()) + " target labels");
}

}  // namespace

std::string attention_svg(const AttentionMatrix& m, const std::vector<std::string>& src_tokens,
                          const std::vector<std::string>& tgt_tokens) {
  check_labels(m, src_tokens, tgt_tokens);
  const int cell = 24, left = 110, top = 110;
  const int width = left + cell * static_cast<int>(m.cols) + 10;
  const int height = top + cell * static_cast<int>(m.rows) + 10;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"monospace\" font-size=\"12\">\n";
  for (std::size_t c = 0; c < m.cols; ++c) {
    const int x = left + cell * static_cast<int>(c) + cell / 2;
    o << "<text x=\"" << x << "\" y=\"" << top - 6 << "\" transform=\"rotate(-60 " << x << " " << top - 6 << ")\">"
      << xml_escape(tgt_tokens[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < m.rows; ++r) {
    const int y = top + cell * static_cast<int>(r);
    o << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">" << xml_escape(src_tokens[r])
      << "</text>\n";
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double a = std::clamp(m.at(r, c), 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - a)));
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02x%02x", shade, shade, shade);
      o << "<rect class=\"cell\" x=\"" << left + cell * static_cast<int>(c) << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
        << cell << "\" fill=\"" << fill << "\"><title>" << a << "</title></rect>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

std::string attention_text(const AttentionMatrix& m) {
  std::ostringstream o;
  o << m.rows << ' ' << m.cols << '\n';
  char buf[32];
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", m.at(r, c));
      o << (c ? " " : "") << buf;
    }
    o << '\n';
  }
  return o.str();
}

AttentionMatrix parse_attention_text(const std::string& text) {
  std::istringstream in(text);
  std::size_t rows = 0, cols = 0;
  if (!(in >> rows >> cols)) throw ParseError("attention dump lacks its 'l m' header");
  AttentionMatrix m(rows, cols);
  for (auto& v : m.values)
    if (!(in >> v)) throw ParseError("attention dump ends early");
  return m;
}

void export_attention(const AttentionMatrix& m, const std::vector<std::string>& src_tokens,
                      const std::vector<std::string>& tgt_tokens, const std::string& path) {
  const auto svg = attention_svg(m, src_tokens, tgt_tokens);
  std::string base = path;
  if (base.size() >= 4 && base.compare(base.size() - 4, 4, ".svg") == 0) base.resize(base.size() - 4);
  std::ofstream s(path);
  if (!s) throw IoError("cannot write " + path);
  s << svg;
  std::ofstream t(base + ".att.txt");
  if (!t) throw IoError("cannot write " + base + ".att.txt");
  t << attention_text(m);
}

}  // namespace tsnmt::eval
