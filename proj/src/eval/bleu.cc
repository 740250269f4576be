#include "tsnmt/eval/bleu.h"

#include <cmath>
#include <cstdio>
#include <map>

#include "tsnmt/corpus/tokenize.h"
#include "tsnmt/errors.h"

namespace tsnmt::eval {

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (std::size_t n = 0; n < 4; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

std::string BleuReport::str() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "BLEU = %.2f, %.1f/%.1f/%.1f/%.1f (BP=%.3f, ratio=%.3f, hyp_len=%zu, ref_len=%zu)", bleu,
                100 * precisions[0], 100 * precisions[1], 100 * precisions[2], 100 * precisions[3], brevity_penalty, ratio,
                hyp_len, ref_len);
  return buf;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++out[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  return out;
}

}  // namespace

BleuStats sentence_stats(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  BleuStats s;
  s.hyp_len = hyp.size();
  s.ref_len = ref.size();
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto h = ngrams(hyp, n);
    const auto r = ngrams(ref, n);
    for (const auto& [gram, count] : h) {
      s.totals[n - 1] += count;
      auto it = r.find(gram);
      if (it != r.end()) s.matches[n - 1] += std::min(count, it->second);
    }
  }
  return s;
}

BleuReport bleu_from_stats(const BleuStats& s) {
  BleuReport r;
  r.hyp_len = s.hyp_len;
  r.ref_len = s.ref_len;
  bool any_zero = false;
  double log_sum = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    r.precisions[n] = s.totals[n] ? static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]) : 0.0;
    if (r.precisions[n] <= 0) any_zero = true;
    else log_sum += std::log(r.precisions[n]);
  }
  if (s.ref_len) r.ratio = static_cast<double>(s.hyp_len) / static_cast<double>(s.ref_len);
  if (s.hyp_len == 0) r.brevity_penalty = 0;
  else if (s.hyp_len < s.ref_len) r.brevity_penalty = std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.hyp_len));
  else r.brevity_penalty = 1;
  r.bleu = any_zero ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum / 4.0);
  return r;
}

BleuReport bleu_score(const std::vector<std::string>& hyp_lines, const std::vector<std::string>& ref_lines) {
  if (hyp_lines.size() != ref_lines.size())
    throw AlignmentError("hypothesis has " + std::to_string(hyp_lines.size()) + " lines, reference has " +
                         std::to_string(ref_lines.size()));
  BleuStats total;
  for (std::size_t i = 0; i < hyp_lines.size(); ++i)
    total += sentence_stats(corpus::split_whitespace(hyp_lines[i]), corpus::split_whitespace(ref_lines[i]));
  return bleu_from_stats(total);
}

}  // namespace tsnmt::eval
