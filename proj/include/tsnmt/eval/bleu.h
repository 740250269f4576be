#pragma once

#include <array>
#include <string>
#include <vector>

namespace tsnmt::eval {

// Clipped n-gram statistics for n = 1..4. Sentence statistics add up to
// corpus statistics.
struct BleuStats {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o);
};

struct BleuReport {
  double bleu = 0;                       // 0..100
  std::array<double, 4> precisions{};    // 0..1
  double brevity_penalty = 0;
  double ratio = 0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  // BLEU = 77.88, 100.0/100.0/100.0/100.0 (BP=0.779, ratio=0.800, hyp_len=4, ref_len=5)
  std::string str() const;
};

BleuStats sentence_stats(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);
BleuReport bleu_from_stats(const BleuStats& stats);

// Corpus BLEU over whitespace-tokenized lines, case-sensitive, single
// reference. Any zero n-gram precision gives 0.
BleuReport bleu_score(const std::vector<std::string>& hyp_lines, const std::vector<std::string>& ref_lines);

}  // namespace tsnmt::eval
