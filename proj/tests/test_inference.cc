#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "brute_force.h"
#include "support.h"
#include "tsnmt/app/experiment.h"
#include "tsnmt/corpus/tokenize.h"
#include "tsnmt/errors.h"
#include "tsnmt/eval/evaluate.h"

using namespace tsnmt;
using namespace tsnmt::eval;
using namespace brute;

namespace {

// A fixed argmax path: token path[t] at step t, then the end token.
class FixedScorer : public Scorer {
 public:
  explicit FixedScorer(std::vector<int> path) : path_(std::move(path)) {}
  std::size_t start() override { return 0; }
  std::vector<double> log_probs(std::size_t step) override {
    std::vector<double> lp(5, std::log(0.05));
    lp[step < path_.size() ? path_[step] : 0] = std::log(0.8);
    return lp;
  }
  std::size_t advance(std::size_t state, int) override { return state + 1; }
  std::vector<double> attention(std::size_t step) override { return {step % 2 ? 0.25 : 0.75, step % 2 ? 0.75 : 0.25}; }
  int end_token() const override { return 0; }

 private:
  std::vector<int> path_;
};

ModelParams<float> random_model(Variant v, std::uint64_t seed) {
  ModelConfig c;
  c.d_emb = 16;
  c.d_hidden = 16;
  c.src_vocab = 20;
  c.tgt_vocab = 12;
  c.variant = v;
  c.languages = {"A", "B", "C"};
  c.trained_directions = {{"A", "B"}, {"B", "A"}, {"A", "C"}, {"C", "A"}};
  ModelParams<float> m(c);
  m.initialize(seed, 1.0);
  Rng rng(seed);
  for (auto& b : m.vocab_bias.value.values()) b = static_cast<float>(rng.uniform(-1, 1));
  return m;
}

}  // namespace

TEST_CASE("bleu examples") {
  auto same = bleu_score({"a b c d"}, {"a b c d"});
  CHECK(same.bleu == doctest::Approx(100.0));
  CHECK(same.brevity_penalty == 1.0);

  auto short_hyp = bleu_score({"a b c d"}, {"a b c d e"});
  for (double p : short_hyp.precisions) CHECK(p == 1.0);
  CHECK(short_hyp.brevity_penalty == doctest::Approx(std::exp(1 - 5.0 / 4)).epsilon(1e-12));
  CHECK(short_hyp.bleu == doctest::Approx(77.88).epsilon(1e-4));
  CHECK(short_hyp.str() == "BLEU = 77.88, 100.0/100.0/100.0/100.0 (BP=0.779, ratio=0.800, hyp_len=4, ref_len=5)");

  CHECK(bleu_score({"a b c"}, {"a b c"}).bleu == 0);  // no 4-grams at all
  CHECK(bleu_score({"A b c d"}, {"a b c d"}).bleu == 0);  // case-sensitive: no matching 4-gram
  CHECK(bleu_score({"the the the the"}, {"the cat"}).precisions[0] == doctest::Approx(0.25));
  CHECK(bleu_score({""}, {"a"}).bleu == 0);
  CHECK_THROWS_AS(bleu_score({"a", "b"}, {"a"}), AlignmentError);
}

TEST_CASE("bleu matches a brute-force oracle on 100 corpora") {
  Rng rng(31);
  double worst = 0;
  std::size_t nonzero = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Lines hyps, refs;
    const std::size_t n = 1 + rng.below(50);
    for (std::size_t i = 0; i < n; ++i) {
      refs.push_back(random_line(rng, 4 + rng.below(6), 15));
      hyps.push_back(rng.below(5) ? mutate(rng, refs.back()) : random_line(rng, 6, 15));
    }
    const double ours = bleu_score(hyps, refs).bleu, ref = oracle_bleu(hyps, refs);
    CAPTURE(trial);
    CHECK(std::abs(ours - ref) <= 0.01);
    worst = std::max(worst, std::abs(ours - ref));
    nonzero += ref > 0;
  }
  MESSAGE("largest BLEU difference " << worst << ", " << nonzero << " non-zero corpora");
  CHECK(nonzero > 80);
}

TEST_CASE("sentence statistics add up to corpus statistics") {
  Rng rng(2);
  Lines hyps, refs;
  BleuStats sum;
  for (int i = 0; i < 30; ++i) {
    refs.push_back(random_line(rng, 5, 12));
    hyps.push_back(mutate(rng, refs.back()));
    sum += sentence_stats(words(hyps.back()), words(refs.back()));
  }
  CHECK(bleu_from_stats(sum).bleu == bleu_score(hyps, refs).bleu);
}

TEST_CASE("greedy decoding") {
  FixedScorer s({3, 1, 4});
  auto h = greedy_decode(s, 10);
  CHECK(h.tokens == std::vector<int>{3, 1, 4});
  CHECK(h.finished);
  CHECK(h.log_prob == doctest::Approx(4 * std::log(0.8)));
  CHECK(h.attention.cols == 3);
  CHECK(h.attention.rows == 2);
  for (std::size_t c = 0; c < 3; ++c) CHECK(h.attention.at(0, c) + h.attention.at(1, c) == doctest::Approx(1));

  auto capped = greedy_decode(s, 2);
  CHECK(capped.tokens == std::vector<int>{3, 1});
  CHECK_FALSE(capped.finished);
  CHECK(default_max_len(4) == 22);
  CHECK_THROWS_AS(beam_decode(s, 0, 5), ConfigError);
}

TEST_CASE("beam search matches exhaustive enumeration on rigged three-step models") {
  // One content word plus the end token: every step offers two candidates per
  // live hypothesis, and at most one hypothesis stays live, so beams of two
  // and three see every output of length <= 3 and must find the optimum.
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    for (std::size_t beam : {2, 3}) {
      TreeScorer a(2, seed), b(2, seed);
      const auto best = exhaustive(a, 3);
      const auto got = beam_decode(b, beam, 3);
      CAPTURE(seed);
      CAPTURE(beam);
      CHECK(got.tokens == best.tokens);
      CHECK(got.log_prob == doctest::Approx(best.log_prob).epsilon(1e-12));
      CHECK(got.finished == (got.tokens.size() < 3));
    }
  }
  // Two content words: beam 3 keeps every candidate at the first step and
  // prunes later, so it can only be checked for consistency. Its score is
  // the true score of the sequence it returns and never beats the optimum.
  std::size_t exact = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    for (std::size_t beam : {1, 2, 3}) {
      TreeScorer a(3, seed), b(3, seed), c(3, seed);
      const auto best = exhaustive(a, 3);
      const auto got = beam_decode(b, beam, 3);
      double rescored = 0;
      std::size_t state = c.start();
      for (int t : got.tokens) {
        rescored += c.log_probs(state)[t];
        state = c.advance(state, t);
      }
      if (got.finished) rescored += c.log_probs(state)[0];
      CHECK(rescored == doctest::Approx(got.log_prob).epsilon(1e-12));
      CHECK(got.log_prob <= best.log_prob + 1e-12);
      if (beam == 3) exact += got.tokens == best.tokens;
    }
  }
  MESSAGE("beam 3 found the optimum in " << exact << " of 500 two-word trees");
}

TEST_CASE("an unpruned beam is exhaustive") {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    TreeScorer a(4, seed), b(4, seed);
    const auto best = exhaustive(a, 3);
    const auto got = beam_decode(b, 64, 3);
    CAPTURE(seed);
    CHECK(got.tokens == best.tokens);
    CHECK(got.log_prob == doctest::Approx(best.log_prob).epsilon(1e-12));
  }
}

TEST_CASE("beam search pruning on a garden path") {
  // Greedy takes token 1 (0.6) but everything after it is flat; token 2
  // (0.4) leads to a near-certain finish.
  class Garden : public TreeScorer {
   public:
    Garden() : TreeScorer(4, 0) {}
    std::vector<double> log_probs(std::size_t state) override {
      const auto& p = prefixes_[state];
      if (p.empty()) return {std::log(1e-6), std::log(0.6), std::log(0.4 - 2e-6), std::log(1e-6)};
      if (p[0] == 1) return {std::log(0.25), std::log(0.25), std::log(0.25), std::log(0.25)};
      return {std::log(0.97), std::log(0.01), std::log(0.01), std::log(0.01)};
    }
  };
  Garden g1, g2, g3;
  CHECK(greedy_decode(g1, 3).tokens == std::vector<int>{1});
  CHECK(beam_decode(g2, 2, 3).tokens == std::vector<int>{2});
  CHECK(exhaustive(g3, 3).tokens == std::vector<int>{2});
}

TEST_CASE("beam 1 is greedy and wider beams never score lower on a model") {
  for (auto v : {Variant::Target, Variant::Paired}) {
    const auto m = random_model(v, 7);
    const auto key = TaskKey::for_direction(v, {"A", "B"});
    Rng rng(3);
    for (int i = 0; i < 25; ++i) {
      std::vector<int> src(2 + rng.below(6));
      for (auto& x : src) x = 3 + static_cast<int>(rng.below(17));
      NmtScorer s1(m, key, src), s2(m, key, src);
      const auto g = greedy_decode(s1, 12);
      const auto b1 = beam_decode(s2, 1, 12);
      CHECK(g.tokens == b1.tokens);
      CHECK(g.log_prob == b1.log_prob);
      CHECK(g.attention.values == b1.attention.values);
      for (std::size_t k : {2, 3, 5}) {
        NmtScorer sk(m, key, src);
        const auto bk = beam_decode(sk, k, 12);
        CHECK(bk.log_prob >= g.log_prob - 1e-9);
        for (std::size_t c = 0; c < bk.attention.cols; ++c) {
          double total = 0;
          for (std::size_t r = 0; r < bk.attention.rows; ++r) total += bk.attention.at(r, c);
          CHECK(std::abs(total - 1) < 1e-5);
        }
      }
    }
    if (v == Variant::Paired) CHECK_THROWS_AS(NmtScorer(m, TaskKey::for_direction(v, {"B", "C"}), {3, 4}), UnknownTaskError);
    else CHECK_NOTHROW(NmtScorer(m, TaskKey::for_direction(v, {"B", "C"}), {3, 4}));
  }
}

TEST_CASE("zero-shot directions") {
  auto as_set = [](const std::vector<Direction>& d) { return std::set<Direction>(d.begin(), d.end()); };
  const std::vector<std::string> langs = {"En", "Fr", "Es", "De"};
  const std::vector<Direction> hub = {{"Fr", "En"}, {"Es", "En"}, {"De", "En"}};
  CHECK(as_set(zero_shot_directions(langs, hub)) ==
        std::set<Direction>{{"Fr", "Es"}, {"Es", "Fr"}, {"Fr", "De"}, {"De", "Fr"}, {"De", "Es"}, {"Es", "De"}});
  std::vector<Direction> all;
  for (const auto& a : langs)
    for (const auto& b : langs)
      if (a != b) all.push_back({a, b});
  CHECK(zero_shot_directions(langs, all).empty());
  CHECK(zero_shot_directions({"A", "B"}, {{"A", "B"}}).empty());

  // Disjoint from the trained pairs, and together they cover every pair.
  auto zs = as_set(zero_shot_directions(langs, hub));
  for (const auto& d : hub) {
    CHECK(zs.count(d) == 0);
    CHECK(zs.count({d.tgt, d.src}) == 0);
    zs.insert(d);
    zs.insert({d.tgt, d.src});
  }
  CHECK(zs == as_set(all));
}

TEST_CASE("attention entropy") {
  AttentionMatrix onehot(3, 2);
  onehot.at(0, 0) = 1;
  onehot.at(2, 1) = 1;
  CHECK(attention_entropy(onehot) == 0);

  AttentionMatrix uniform(4, 3);
  for (auto& v : uniform.values) v = 0.25;
  CHECK(attention_entropy(uniform) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  Rng rng(6);
  AttentionMatrix mixed(5, 4);
  for (std::size_t c = 0; c < 4; ++c) {
    double z = 0;
    for (std::size_t r = 0; r < 5; ++r) z += mixed.at(r, c) = rng.uniform();
    for (std::size_t r = 0; r < 5; ++r) mixed.at(r, c) /= z;
  }
  mixed.at(0, 3) += mixed.at(1, 3);
  mixed.at(1, 3) = 0;
  long double expected = 0;
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t r = 0; r < 5; ++r) {
      const long double a = mixed.at(r, c);
      if (a > 0) expected -= a * std::log(a);
    }
  CHECK(std::abs(attention_entropy(mixed) - static_cast<double>(expected / 4)) < 1e-9);
  CHECK(attention_entropy(AttentionMatrix()) == 0);
}

TEST_CASE("attention export") {
  AttentionMatrix m(2, 2);
  m.at(0, 0) = 0.9;
  m.at(1, 0) = 0.1;
  m.at(0, 1) = 0.2;
  m.at(1, 1) = 0.8;
  const auto svg = attention_svg(m, {"Guide", "<ToEn>"}, {"guide", "&co"});
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find(">Guide<") != std::string::npos);
  CHECK(svg.find("&lt;ToEn&gt;") != std::string::npos);
  CHECK(svg.find("&amp;co") != std::string::npos);
  std::size_t cells = 0;
  for (std::size_t p = svg.find("class=\"cell\""); p != std::string::npos; p = svg.find("class=\"cell\"", p + 1)) ++cells;
  CHECK(cells == 4);
  // Cells are written row by row; darker means a lower grey level.
  std::vector<int> grey;
  for (std::size_t p = svg.find("fill=\"#"); p != std::string::npos; p = svg.find("fill=\"#", p + 1))
    grey.push_back(std::stoi(svg.substr(p + 7, 2), nullptr, 16));
  REQUIRE(grey.size() == 4);
  CHECK(std::max(grey[0], grey[3]) < std::min(grey[1], grey[2]));
  CHECK_THROWS_AS(attention_svg(m, {"one"}, {"a", "b"}), ContractError);
  CHECK_THROWS_AS(attention_svg(m, {"one", "two"}, {"a"}), ContractError);

  Rng rng(4);
  AttentionMatrix r(3, 5);
  for (auto& v : r.values) v = rng.uniform();
  const auto text = attention_text(r);
  CHECK(text.rfind("3 5\n", 0) == 0);
  const auto back = parse_attention_text(text);
  REQUIRE(back.rows == 3);
  REQUIRE(back.cols == 5);
  for (std::size_t i = 0; i < 15; ++i) CHECK(std::abs(back.values[i] - r.values[i]) < 1e-6);

  const auto dir = testing::scratch_dir("attention");
  export_attention(m, {"a", "b"}, {"x", "y"}, (dir / "m.svg").string());
  CHECK(std::filesystem::exists(dir / "m.svg"));
  std::ifstream in(dir / "m.att.txt");
  std::string line;
  std::getline(in, line);
  CHECK(line == "2 2");
}

TEST_CASE("evaluation across seeds and variants") {
  toy::ToyCorpusSpec spec;
  spec.sentences_per_pair = 30;
  spec.valid_per_pair = 10;
  spec.test_per_pair = 8;
  const auto corpus = toy::generate_parallel_corpus(spec);
  auto translator = [&](Variant v, std::uint64_t seed) {
    const auto data = app::prepare_data(corpus.train, corpus.valid, v, spec.languages);
    auto cfg = train::TrainingConfig::desk();
    cfg.variant = v;
    cfg.d_emb = cfg.d_hidden = 16;
    ModelParams<float> m(app::model_config(cfg, data));
    m.initialize(seed, cfg.init_range);
    return Translator(m, data.src_vocab, data.tgt_vocab);
  };
  TestSet zs;
  for (const auto& pc : corpus.test)
    if (pc.pair == Direction{"B", "C"}) zs = {pc.pair, pc.first, pc.second};
  REQUIRE(zs.src.size() == 8);

  const auto t1 = translator(Variant::Target, 1), t2 = translator(Variant::Target, 2);
  const auto one = evaluate_direction({&t1}, zs);
  CHECK_FALSE(one.skipped);
  REQUIRE(one.seeds.size() == 1);
  CHECK(one.mean_bleu == one.seeds[0].bleu.bleu);
  CHECK(one.mean_accuracy == one.seeds[0].accuracy);
  CHECK(one.seeds[0].hypotheses.size() == 8);

  const auto two = evaluate_direction({&t1, &t2}, zs);
  CHECK(two.mean_entropy == doctest::Approx((two.seeds[0].entropy + two.seeds[1].entropy) / 2));
  DecodeOptions threaded;
  threaded.threads = 3;
  CHECK(evaluate_direction({&t1, &t2}, zs, threaded).seeds[1].hypotheses == two.seeds[1].hypotheses);

  const auto paired = translator(Variant::Paired, 1);
  CHECK_FALSE(paired.supports(zs.direction));
  CHECK(paired.supports({"A", "B"}));
  const auto skipped = evaluate_direction({&paired}, zs);
  CHECK(skipped.skipped);
  CHECK(skipped.skip_reason.rfind("unknown task", 0) == 0);
  CHECK_THROWS_AS(paired.translate(zs.src[0], zs.direction), UnknownTaskError);

  const auto src_model = translator(Variant::Source, 1);
  CHECK(src_model.translate(zs.src[0], zs.direction).model_input.front() == "<ToC>");

  CHECK_THROWS_AS(load_translators({"/nonexistent/seed1.ckpt"}), ConfigError);
}
