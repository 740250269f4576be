#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <regex>
#include <set>

#include "support.h"
#include "tsnmt/corpus/batching.h"
#include "tsnmt/corpus/corpus.h"
#include "tsnmt/corpus/task_tokens.h"
#include "tsnmt/corpus/tokenize.h"
#include "tsnmt/errors.h"

using namespace tsnmt;
using namespace tsnmt::corpus;
using Tokens = std::vector<std::string>;

namespace {

const std::vector<std::string> kLangs = {"Fr", "En", "Es", "De"};

std::string random_word(Rng& rng) {
  static const std::vector<std::string> pieces = {"ab", "c@@", "d", "é", "x@@", "yz", "q", ",", ".", "<To"};
  return pieces[rng.below(pieces.size())] + std::to_string(rng.below(3));
}

Tokens random_sentence(Rng& rng, std::size_t max_len = 8) {
  Tokens t(rng.below(max_len + 1));
  for (auto& w : t) w = random_word(rng);
  return t;
}

Direction random_direction(Rng& rng) {
  const auto s = rng.below(kLangs.size());
  auto t = rng.below(kLangs.size() - 1);
  if (t >= s) ++t;
  return {kLangs[s], kLangs[t]};
}

EncodedExample example(const TaskKey& task, std::size_t src_len, std::size_t tgt_len, Direction dir = {}) {
  return {std::vector<int>(src_len, 5), std::vector<int>(tgt_len, 6), task, dir};
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Guide des industries canadiennes :") == Tokens{"Guide", "des", "industries", "canadiennes", ":"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t ").empty());
  CHECK(tokenize("a,b") == Tokens{"a", ",", "b"});
  CHECK(tokenize("Hi! ok?") == Tokens{"Hi", "!", "ok", "?"});
  CHECK(detokenize({"Hi", "!", "ok", "?"}) == "Hi! ok?");
  CHECK(join({"a", "b"}) == "a b");
}

TEST_CASE("augment_task_tokens follows the printed token spellings") {
  const Direction fr_en{"Fr", "En"};
  CHECK(join(augment_task_tokens(Variant::Target, fr_en, tokenize("Guide des industries canadiennes :"), kLangs)) ==
        "<ToEn> Guide des industries canadiennes : <ToEn>");
  CHECK(augment_task_tokens(Variant::Source, fr_en, {"w1", "w2"}, kLangs) == Tokens{"<FromFr>", "<ToEn>", "w1", "w2", "<ToEn>"});
  CHECK(augment_task_tokens(Variant::Paired, fr_en, {"w1"}, kLangs) == Tokens{"<FrEn>", "w1", "<FrEn>"});
  CHECK(augment_task_tokens(Variant::Shared, fr_en, {"w1"}, kLangs) == Tokens{"<ToEn>", "w1", "<ToEn>"});
  CHECK_THROWS_AS(augment_task_tokens(Variant::Target, Direction{"Fr", "Xx"}, {"w"}, kLangs), ConfigError);
  CHECK_THROWS_AS(augment_task_tokens(Variant::Source, Direction{"Xx", "En"}, {"w"}, kLangs), ConfigError);
}

TEST_CASE("strip_attention_selector") {
  auto [k1, t1] = strip_attention_selector(Variant::Source, {"<FromFr>", "<ToEn>", "w", "<ToEn>"}, kLangs);
  CHECK(k1 == TaskKey::source("Fr"));
  CHECK(t1 == Tokens{"<ToEn>", "w", "<ToEn>"});
  auto [k2, t2] = strip_attention_selector(Variant::Target, {"<ToEn>", "w", "<ToEn>"}, kLangs);
  CHECK(k2 == TaskKey::target("En"));
  CHECK(t2 == Tokens{"<ToEn>", "w", "<ToEn>"});
  auto [k3, t3] = strip_attention_selector(Variant::Paired, {"<FrEn>", "w", "<FrEn>"}, kLangs);
  CHECK(k3 == TaskKey::pair("Fr", "En"));
  CHECK(t3 == Tokens{"<FrEn>", "w", "<FrEn>"});

  try {
    strip_attention_selector(Variant::Target, {"<FromFr>", "w"}, kLangs);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("<FromFr>") != std::string::npos);
  }
  CHECK_THROWS_AS(strip_attention_selector(Variant::Source, {"<ToEn>", "w"}, kLangs), ParseError);
  CHECK_THROWS_AS(strip_attention_selector(Variant::Source, {"<FromFr>", "w"}, kLangs), ParseError);
  CHECK_THROWS_AS(strip_attention_selector(Variant::Paired, {"<FrFr>", "w"}, kLangs), ParseError);
  CHECK_THROWS_AS(strip_attention_selector(Variant::Target, {}, kLangs), ParseError);
}

TEST_CASE("augmented output matches the grammar on random corpora") {
  const std::string lang = "(Fr|En|Es|De)";
  const std::string body = "( [^ ]+)*";
  const std::regex target("<To" + lang + ">" + body + " <To\\1>");
  const std::regex source("<From" + lang + "> <To" + lang + ">" + body + " <To\\2>");
  const std::regex paired("<" + lang + lang + ">" + body + " <\\1\\2>");
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const auto dir = random_direction(rng);
    const auto words = random_sentence(rng);
    std::smatch m;
    const auto t = join(augment_task_tokens(Variant::Target, dir, words, kLangs));
    REQUIRE(std::regex_match(t, m, target));
    CHECK(m[1] == dir.tgt);
    const auto s = join(augment_task_tokens(Variant::Source, dir, words, kLangs));
    REQUIRE(std::regex_match(s, m, source));
    CHECK(m[1] == dir.src);
    CHECK(m[2] == dir.tgt);
    const auto p = join(augment_task_tokens(Variant::Paired, dir, words, kLangs));
    REQUIRE(std::regex_match(p, m, paired));
    CHECK(m[1] == dir.src);
    CHECK(m[2] == dir.tgt);
    CHECK(join(augment_task_tokens(Variant::Shared, dir, words, kLangs)) == t);

    // The inner words survive unchanged.
    const auto inner = augment_task_tokens(Variant::Paired, dir, words, kLangs);
    CHECK(Tokens(inner.begin() + 1, inner.end() - 1) == words);

    // Selector stripping makes source-specific input identical to target-specific input.
    const auto stripped = strip_attention_selector(Variant::Source, augment_task_tokens(Variant::Source, dir, words, kLangs), kLangs);
    CHECK(join(stripped.second) == t);
    CHECK(stripped.first == TaskKey::source(dir.src));
    CHECK(strip_attention_selector(Variant::Target, augment_task_tokens(Variant::Target, dir, words, kLangs), kLangs).first ==
          TaskKey::target(dir.tgt));
  }
}

TEST_CASE("merge_bidirectional_corpus") {
  std::vector<PairCorpus> pairs = {
      {{"Fr", "En"}, {"f1", "f2", "f3"}, {"e1", "e2", "e3"}},
      {{"Es", "En"}, {"s1", "s2", "s3"}, {"e1", "e2", "e3"}},
      {{"De", "En"}, {"d1", "d2", "d3"}, {"e1", "e2", "e3"}},
  };
  auto merged = merge_bidirectional_corpus(pairs);
  CHECK(merged.size() == 18);
  std::map<std::string, int> per_dir;
  for (const auto& s : merged) per_dir[s.direction.str()]++;
  CHECK(per_dir.size() == 6);
  for (const auto& [d, n] : per_dir) CHECK(n == 3);

  auto one = merge_bidirectional_corpus({{{"Fr", "En"}, {"bonjour"}, {"hello"}}});
  REQUIRE(one.size() == 2);
  CHECK(one[0].direction == Direction{"Fr", "En"});
  CHECK(one[0].src == "bonjour");
  CHECK(one[1].direction == Direction{"En", "Fr"});
  CHECK(one[1].src == "hello");
  CHECK(one[1].tgt == "bonjour");

  try {
    merge_bidirectional_corpus({{{"Fr", "En"}, {"a", "b", "c"}, {"x", "y"}}});
    FAIL("expected an alignment error");
  } catch (const AlignmentError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("vocabularies") {
  SUBCASE("reserved tokens on a nearly empty corpus") {
    auto v = build_vocab({}, all_task_tokens(kLangs));
    CHECK(v.token(Vocab::kBos) == "<s>");
    CHECK(v.token(Vocab::kEos) == "</s>");
    CHECK(v.token(Vocab::kUnk) == "<unk>");
    for (const auto& l : kLangs) {
      CHECK(v.contains("<To" + l + ">"));
      CHECK(v.contains("<From" + l + ">"));
    }
    CHECK(v.contains("<FrEn>"));
    CHECK_FALSE(v.contains("<FrFr>"));
    CHECK(v.size() == 3 + 4 + 4 + 12);
  }
  SUBCASE("frequency order against a counting oracle") {
    Rng rng(4);
    std::vector<ParallelExample> examples;
    for (int i = 0; i < 300; ++i) {
      const auto dir = random_direction(rng);
      DirectedSentence s{dir, join(random_sentence(rng)), join(random_sentence(rng))};
      examples.push_back(prepare_example(s, nullptr, Variant::Source, kLangs));
    }
    const auto v = build_source_vocab(examples, Variant::Source, kLangs);
    std::map<std::string, std::size_t> counts;
    for (const auto& ex : examples)
      for (std::size_t i = 1; i < ex.src.size(); ++i) counts[ex.src[i]]++;
    const auto reserved = all_task_tokens(kLangs);
    std::vector<std::pair<std::string, std::size_t>> expected;
    for (const auto& [t, n] : counts)
      if (std::find(reserved.begin(), reserved.end(), t) == reserved.end()) expected.emplace_back(t, n);
    std::sort(expected.begin(), expected.end(), [](auto& a, auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
    REQUIRE(v.size() == 3 + reserved.size() + expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(v.token(static_cast<int>(3 + reserved.size() + i)) == expected[i].first);

    // ids -> tokens -> ids
    for (const auto& ex : examples) {
      auto stripped = strip_attention_selector(Variant::Source, ex.src, kLangs).second;
      auto ids = v.encode(stripped);
      CHECK(v.decode(ids) == stripped);
      CHECK(v.encode(v.decode(ids)) == ids);
    }
    CHECK(v.id("never-seen") == Vocab::kUnk);
    CHECK(Vocab::deserialize(v.serialize()) == v);
  }
}

TEST_CASE("make_batches examples") {
  const auto a = TaskKey::target("En"), b = TaskKey::target("Fr");
  SUBCASE("greedy fill") {
    auto batches = make_batches({example(a, 2, 2), example(a, 2, 2), example(a, 2, 2)}, 10);
    REQUIRE(batches.size() == 2);
    CHECK(batches[0].examples == std::vector<std::size_t>{0, 1});
    CHECK(batches[0].token_count == 8);
    CHECK(batches[1].token_count == 4);
  }
  SUBCASE("task changes force a flush") {
    auto batches = make_batches({example(a, 2, 2), example(b, 2, 2), example(a, 2, 2)}, 1000000);
    REQUIRE(batches.size() == 3);
    CHECK(batches[1].task == b);
  }
  SUBCASE("an example exactly at the cap") {
    auto batches = make_batches({example(a, 2500, 2500)}, 5000);
    REQUIRE(batches.size() == 1);
    CHECK(batches[0].token_count == 5000);
    CHECK_THROWS_AS(make_batches({example(a, 2500, 2501)}, 5000), OversizeExampleError);
  }
  SUBCASE("teacher forcing layout") {
    std::vector<EncodedExample> ex = {{{7, 8}, {4, 5, 6}, a, {}}, {{9}, {3}, a, {}}};
    auto batch = make_batches(ex, 100).at(0);
    CHECK(batch.tgt_in.ids[0] == std::vector<int>{Vocab::kBos, Vocab::kBos});
    CHECK(batch.tgt_out.ids[3] == std::vector<int>{Vocab::kEos, Vocab::kEos});
    CHECK(batch.tgt_out.mask[3] == std::vector<std::uint8_t>{1, 0});
    CHECK(batch.tgt_out.ids[1] == std::vector<int>{5, Vocab::kEos});
    CHECK(batch.tgt_out.mask[1] == std::vector<std::uint8_t>{1, 1});
    CHECK(batch.src.mask[1] == std::vector<std::uint8_t>{1, 0});
  }
}

TEST_CASE("batches are homogeneous, capped and cover the input") {
  Rng rng(8);
  for (auto variant : {Variant::Shared, Variant::Target, Variant::Source, Variant::Paired}) {
    for (std::size_t cap : {40, 200, 5000}) {
      std::vector<ParallelExample> prepared;
      for (int i = 0; i < 400; ++i) {
        DirectedSentence s{random_direction(rng), join(random_sentence(rng, 12)), join(random_sentence(rng, 12))};
        prepared.push_back(prepare_example(s, nullptr, variant, kLangs));
      }
      const auto sv = build_source_vocab(prepared, variant, kLangs);
      const auto tv = build_target_vocab(prepared);
      const auto examples = encode_examples(prepared, variant, kLangs, sv, tv);
      for (std::uint64_t epoch = 1; epoch <= 3; ++epoch) {
        const auto batches = epoch_batches(examples, cap, 11, epoch);
        std::vector<std::size_t> seen;
        for (const auto& b : batches) {
          std::size_t tokens = 0;
          for (auto i : b.examples) {
            CHECK(examples[i].task == b.task);
            tokens += examples[i].token_count();
            seen.push_back(i);
          }
          CHECK(tokens == b.token_count);
          CHECK(tokens <= cap);
        }
        std::sort(seen.begin(), seen.end());
        std::vector<std::size_t> all(examples.size());
        std::iota(all.begin(), all.end(), 0);
        CHECK(seen == all);
      }
    }
  }
}

TEST_CASE("batch boundaries do not depend on the variant") {
  Rng rng(12);
  std::vector<DirectedSentence> raw;
  for (int i = 0; i < 300; ++i) raw.push_back({random_direction(rng), join(random_sentence(rng, 10)), join(random_sentence(rng, 10))});
  std::vector<std::vector<std::vector<std::size_t>>> layouts;
  for (auto variant : {Variant::Shared, Variant::Target, Variant::Source, Variant::Paired}) {
    const auto prepared = prepare_examples(raw, nullptr, variant, kLangs);
    const auto examples =
        encode_examples(prepared, variant, kLangs, build_source_vocab(prepared, variant, kLangs), build_target_vocab(prepared));
    for (const auto& batches : {epoch_batches(examples, 60, 5, 2), evaluation_batches(examples, 60)}) {
      std::vector<std::vector<std::size_t>> layout;
      for (const auto& b : batches) {
        for (auto i : b.examples) CHECK(examples[i].direction == examples[b.examples.front()].direction);
        layout.push_back(b.examples);
      }
      layouts.push_back(layout);
    }
  }
  for (std::size_t v = 2; v < layouts.size(); ++v) CHECK(layouts[v] == layouts[v % 2]);
}

TEST_CASE("token count excludes the stripped selector") {
  DirectedSentence s{{"Fr", "En"}, "a b c", "x y"};
  const auto src = prepare_example(s, nullptr, Variant::Source, kLangs);
  const auto tgt = prepare_example(s, nullptr, Variant::Target, kLangs);
  auto sv = build_source_vocab({src}, Variant::Source, kLangs), tv = build_target_vocab({src});
  const auto es = encode_example(src, Variant::Source, kLangs, sv, tv);
  const auto et = encode_example(tgt, Variant::Target, kLangs, sv, tv);
  CHECK(es.src == et.src);
  CHECK(es.token_count() == 5 + 2);
}

TEST_CASE("shuffle_epoch") {
  CHECK(shuffle_epoch(50, 3, 1) == shuffle_epoch(50, 3, 1));
  CHECK(shuffle_epoch(50, 3, 1) != shuffle_epoch(50, 3, 2));
  CHECK(shuffle_epoch(50, 3, 1) != shuffle_epoch(50, 4, 1));
  auto p = shuffle_epoch(50, 3, 1);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < 50; ++i) CHECK(p[i] == i);
}

TEST_CASE("shuffled task positions are uniform") {
  // Ten examples, two of them from task B. Over 1000 shuffles, the position of
  // each B example should be uniform over the ten slots.
  const std::size_t n = 10, shuffles = 1000;
  std::vector<std::vector<double>> hits(2, std::vector<double>(n, 0));
  for (std::uint64_t e = 0; e < shuffles; ++e) {
    const auto order = shuffle_epoch(n, 7, e);
    for (std::size_t pos = 0; pos < n; ++pos)
      if (order[pos] < 2) hits[order[pos]][pos] += 1;
  }
  const double critical = 21.666;  // chi-square, 9 degrees of freedom, alpha 0.01
  for (const auto& h : hits) {
    double chi = 0;
    const double expected = double(shuffles) / n;
    for (double o : h) chi += (o - expected) * (o - expected) / expected;
    CAPTURE(chi);
    CHECK(chi < critical);
  }
}

TEST_CASE("tasks arrive in proportion to their share of the data") {
  // 3:1 split between two tasks; within any long prefix of the epoch's batch
  // sequence the task mix tracks the data.
  std::vector<EncodedExample> examples;
  for (int i = 0; i < 4000; ++i) {
    const bool major = i % 4 != 0;
    examples.push_back(example(major ? TaskKey::target("En") : TaskKey::target("Fr"), 3, 3,
                               major ? Direction{"Fr", "En"} : Direction{"En", "Fr"}));
  }
  const auto batches = epoch_batches(examples, 60, 5, 1);
  std::size_t major = 0, total = 0, switches = 0;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    if (i > 0 && !(batches[i].task == batches[i - 1].task)) ++switches;
    total += batches[i].size();
    if (batches[i].task == TaskKey::target("En")) major += batches[i].size();
    if (i + 1 == batches.size() / 2) {
      const double share = double(major) / total;
      CHECK(share == doctest::Approx(0.75).epsilon(0.1));
    }
  }
  CHECK(double(major) / total == 0.75);
  // Not sorted by task.
  CHECK(switches > 20);
}
