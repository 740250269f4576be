#include "tsnmt/app/cli.h"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "tsnmt/app/config.h"
#include "tsnmt/app/experiment.h"
#include "tsnmt/bpe/bpe.h"
#include "tsnmt/corpus/task_tokens.h"
#include "tsnmt/corpus/tokenize.h"
#include "tsnmt/errors.h"

namespace tsnmt::app {

namespace fs = std::filesystem;

namespace {

struct OptionSpec {
  std::string key;
  std::string help;
  std::string fallback;  // empty: no default
};

// A subcommand whose options are all strings keyed by flag name, so that a
// config file can supply any of them.
struct Command {
  CLI::App* app = nullptr;
  std::vector<OptionSpec> specs;
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  Config resolved;

  void add(const OptionSpec& s) {
    specs.push_back(s);
    options[s.key] = app->add_option("--" + s.key, raw[s.key], s.help);
  }

  void resolve() {
    std::set<std::string> allowed;
    for (const auto& s : specs) allowed.insert(s.key);
    if (!config_path.empty()) resolved = Config::load(config_path, allowed);
    for (const auto& s : specs) {
      if (options[s.key]->count() > 0) resolved.set(s.key, raw[s.key]);
      else if (!resolved.has(s.key) && !s.fallback.empty()) resolved.set(s.key, s.fallback);
    }
  }

  std::string need(const std::string& key) const {
    auto v = resolved.get(key);
    if (!v || v->empty()) throw ConfigError("--" + key + " is required for " + app->get_name());
    return *v;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<Direction> parse_pairs(const std::string& s) {
  std::vector<Direction> out;
  for (const auto& p : split_list(s)) out.push_back(Direction::parse(p));
  return out;
}

std::vector<std::string> languages_of(const std::vector<Direction>& pairs) {
  std::vector<std::string> out;
  for (const auto& p : pairs)
    for (const auto& l : {p.src, p.tgt})
      if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  return out;
}

void print_resolved(std::ostream& err, const Command& c) {
  err << "# " << c.app->get_name() << " configuration\n";
  if (!c.config_path.empty()) err << "#   config = " << c.config_path << "\n";
  for (const auto& [k, v] : c.resolved.values()) err << "#   " << k << " = " << v << "\n";
}

std::vector<corpus::PairCorpus> read_split(const std::string& dir, const std::string& split, const std::vector<Direction>& pairs) {
  std::vector<corpus::PairCorpus> out;
  for (const auto& p : pairs)
    out.push_back(corpus::read_pair_corpus(p, toy::split_file(dir, split, p, true), toy::split_file(dir, split, p, false)));
  return out;
}

train::TrainingConfig training_config(const Config& c) {
  auto t = train::TrainingConfig::desk();
  t.d_emb = c.get_size("d-emb", t.d_emb);
  t.d_hidden = c.get_size("d-hidden", t.d_hidden);
  t.batch_tokens = c.get_size("batch-tokens", t.batch_tokens);
  t.epochs = c.get_size("epochs", t.epochs);
  t.seeds = c.get_size("seeds", t.seeds);
  t.validations_per_epoch = c.get_size("validations-per-epoch", t.validations_per_epoch);
  t.clip_norm = c.get_double("clip-norm", t.clip_norm);
  t.init_range = c.get_double("init-range", t.init_range);
  t.adam.learning_rate = c.get_double("learning-rate", t.adam.learning_rate);
  if (auto q = c.get("attention-query")) t.attention_query = parse_attention_query(*q);
  if (auto v = c.get("variant")) t.variant = parse_variant(*v);
  t.validate();
  return t;
}

const std::vector<OptionSpec> kTrainingOptions = {
    {"d-emb", "embedding size", "64"},
    {"d-hidden", "hidden state size", "64"},
    {"batch-tokens", "token cap per batch (source + target)", "500"},
    {"epochs", "training epochs", "10"},
    {"validations-per-epoch", "validation checkpoints per epoch", "1"},
    {"clip-norm", "global gradient norm cap, 0 disables", "0"},
    {"init-range", "matrices start uniform in [-r, r]", "0.3"},
    {"learning-rate", "Adam step size", "0.001"},
    {"attention-query", "prev|intermediate", "intermediate"},
};

// ---- subcommands ----------------------------------------------------------

void cmd_gen_toy(const Command& c, std::ostream& out) {
  auto spec = c.resolved.has("spec") ? toy::ToyCorpusSpec::load(c.need("spec")) : toy::ToyCorpusSpec{};
  spec.seed = c.resolved.get_u64("seed", spec.seed);
  spec.validate();
  const auto dir = c.need("out-dir");
  const auto corpus = toy::generate_parallel_corpus(spec);
  toy::write_toy_corpus(corpus, spec, dir);
  out << "wrote " << corpus.train.size() << " training pairs, " << corpus.test.size() << " test pairs to " << dir << "\n";
}

void cmd_learn_bpe(const Command& c, std::ostream& out) {
  std::map<std::string, std::size_t> counts;
  for (const auto& path : split_list(c.need("input")))
    for (const auto& line : corpus::read_lines(path))
      for (const auto& w : corpus::tokenize(line)) ++counts[w];
  const auto model = bpe::learn_bpe(counts, c.resolved.get_size("merges", 0), c.resolved.get_size("min-count", 1));
  model.save(c.need("output"));
  out << "learned " << model.rules().size() << " merges\n";
}

void cmd_apply_bpe(const Command& c, std::ostream& out) {
  const auto model = bpe::BpeModel::load(c.need("codes"));
  std::vector<std::string> lines;
  for (const auto& line : corpus::read_lines(c.need("input")))
    lines.push_back(corpus::join(bpe::apply_bpe_tokens(model, corpus::tokenize(line))));
  if (auto o = c.resolved.get("output")) corpus::write_lines(*o, lines);
  else
    for (const auto& l : lines) out << l << "\n";
}

void cmd_prepare(const Command& c, std::ostream& out) {
  const auto variant = parse_variant(c.need("variant"));
  const auto pairs = parse_pairs(c.need("pairs"));
  const auto langs = c.resolved.has("languages") ? split_list(c.need("languages")) : languages_of(pairs);
  const auto split = c.resolved.get_string("split", "train");
  std::optional<bpe::BpeModel> codes;
  if (auto p = c.resolved.get("codes")) codes = bpe::BpeModel::load(*p);
  const auto corpora = read_split(c.need("data-dir"), split, pairs);
  const auto examples =
      corpus::prepare_examples(corpus::merge_bidirectional_corpus(corpora), codes ? &*codes : nullptr, variant, langs);
  const auto dir = c.need("out-dir");
  fs::create_directories(dir);
  std::map<Direction, std::pair<std::vector<std::string>, std::vector<std::string>>> by_dir;
  for (const auto& ex : examples) {
    by_dir[ex.direction].first.push_back(corpus::join(ex.src));
    by_dir[ex.direction].second.push_back(corpus::join(ex.tgt));
  }
  for (const auto& [d, lines] : by_dir) {
    corpus::write_lines(toy::split_file(dir, split, d, true), lines.first);
    corpus::write_lines(toy::split_file(dir, split, d, false), lines.second);
  }
  corpus::build_source_vocab(examples, variant, langs).save((fs::path(dir) / "src.vocab").string());
  corpus::build_target_vocab(examples).save((fs::path(dir) / "tgt.vocab").string());
  out << "prepared " << examples.size() << " " << variant_name(variant) << " examples in " << by_dir.size()
      << " directions\n";
}

void cmd_train(const Command& c, std::ostream& out) {
  const auto cfg = training_config(c.resolved);
  const auto pairs = parse_pairs(c.need("pairs"));
  const auto langs = c.resolved.has("languages") ? split_list(c.need("languages")) : languages_of(pairs);
  const auto dir = c.need("data-dir");
  const auto data = prepare_data(read_split(dir, "train", pairs), read_split(dir, "valid", pairs), cfg.variant, langs);
  const std::uint64_t seed = c.resolved.get_u64("seed", 1);
  ModelParams<float> params(model_config(cfg, data));
  params.initialize(seed, cfg.init_range);
  train::Trainer trainer(cfg, std::move(params), data.train, data.valid, seed);
  if (auto r = c.resolved.get("resume")) {
    auto ckpt = train::load_checkpoint(*r);
    if (!(ckpt.src_vocab == data.src_vocab) || !(ckpt.tgt_vocab == data.tgt_vocab))
      throw ConfigError("checkpoint " + *r + " was trained on different vocabularies");
    trainer.resume(ckpt);
  }
  const auto out_dir = c.need("out-dir");
  fs::create_directories(out_dir);
  while (trainer.epochs_done() < cfg.epochs) {
    for (const auto& row : trainer.train_epoch())
      out << "epoch " << row.epoch << " examples " << row.examples << " train_nll " << row.train_nll << " val_ppl "
          << row.val_ppl << "\n";
  }
  trainer.log().save((fs::path(out_dir) / "metrics.tsv").string());
  auto save = [&](const ModelParams<float>& p, const std::string& name, bool with_optimizer) {
    auto ckpt = trainer.checkpoint();
    ckpt.params = p;
    if (!with_optimizer) ckpt.adam = train::AdamState<float>(cfg.adam);
    ckpt.src_vocab = data.src_vocab;
    ckpt.tgt_vocab = data.tgt_vocab;
    train::save_checkpoint(ckpt, (fs::path(out_dir) / name).string());
  };
  save(trainer.params(), "last.ckpt", true);
  save(trainer.best_params(), "best.ckpt", false);
  out << "best validation perplexity " << trainer.best_perplexity() << "\n";
}

std::optional<bpe::BpeModel> load_codes(const Command& c) {
  if (auto p = c.resolved.get("codes")) return bpe::BpeModel::load(*p);
  return std::nullopt;
}

eval::DecodeOptions decode_options(const Command& c) {
  eval::DecodeOptions d;
  d.beam = c.resolved.get_size("beam", 1);
  d.max_len = c.resolved.get_size("max-len", 0);
  if (d.beam == 0) throw ConfigError("--beam must be at least 1");
  return d;
}

void cmd_translate(const Command& c, std::ostream& out) {
  const eval::Translator tr(train::load_checkpoint(c.need("checkpoint")), load_codes(c));
  const auto dir = Direction::parse(c.need("direction"));
  const auto opts = decode_options(c);
  std::vector<std::string> lines;
  for (const auto& line : corpus::read_lines(c.need("input"))) lines.push_back(corpus::detokenize(tr.translate(line, dir, opts).words));
  if (auto o = c.resolved.get("output")) corpus::write_lines(*o, lines);
  else
    for (const auto& l : lines) out << l << "\n";
}

void cmd_score(const Command& c, std::ostream& out) {
  out << eval::bleu_score(corpus::read_lines(c.need("hyp")), corpus::read_lines(c.need("ref"))).str() << "\n";
}

void cmd_export_attention(const Command& c, std::ostream& out) {
  const eval::Translator tr(train::load_checkpoint(c.need("checkpoint")), load_codes(c));
  const auto dir = Direction::parse(c.need("direction"));
  std::string sentence;
  if (auto s = c.resolved.get("sentence")) {
    sentence = *s;
  } else {
    const auto lines = corpus::read_lines(c.need("input"));
    const std::size_t n = c.resolved.get_size("line", 1);
    if (n == 0 || n > lines.size()) throw ConfigError("--line " + std::to_string(n) + " outside " + c.need("input"));
    sentence = lines[n - 1];
  }
  const auto t = tr.translate(sentence, dir, decode_options(c));
  const auto path = c.need("output");
  eval::export_attention(t.hypothesis.attention, t.model_input, t.output, path);
  out << corpus::join(t.output) << "\n";
  out << "attention entropy " << eval::attention_entropy(t.hypothesis.attention) << " nats, written to " << path << "\n";
}

void cmd_experiment(const Command& c, std::ostream& out) {
  ExperimentConfig e;
  if (c.resolved.has("spec")) e.spec = toy::ToyCorpusSpec::load(c.need("spec"));
  e.training = training_config(c.resolved);
  e.seed = c.resolved.get_u64("seed", 1);
  if (auto v = c.resolved.get("variants")) {
    e.variants.clear();
    for (const auto& name : split_list(*v)) e.variants.push_back(parse_variant(name));
  }
  e.decode = decode_options(c);
  e.jobs = c.resolved.get_size("jobs", 1);
  e.out_dir = c.need("out-dir");
  const auto result = run_experiment(e);
  out << results_text(result);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multilingual attention NMT toolkit", "tsnmt"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  std::map<std::string, Command> commands;
  std::map<std::string, void (*)(const Command&, std::ostream&)> handlers;

  auto add = [&](const std::string& name, const std::string& help, std::vector<OptionSpec> specs,
                 void (*handler)(const Command&, std::ostream&)) {
    Command& c = commands[name];
    c.app = app.add_subcommand(name, help);
    c.app->add_option("--config", c.config_path, "key=value file; flags win on conflict");
    for (const auto& s : specs) c.add(s);
    handlers[name] = handler;
  };

  std::vector<OptionSpec> train_specs = kTrainingOptions;
  for (auto extra : std::vector<OptionSpec>{{"variant", "shared|target|source|paired", "shared"},
                                            {"data-dir", "directory with train/valid .src/.tgt files", ""},
                                            {"pairs", "comma-separated language pairs, e.g. A-B,A-C", ""},
                                            {"languages", "language list; defaults to those in --pairs", ""},
                                            {"seed", "random seed", "1"},
                                            {"resume", "checkpoint to continue from", ""},
                                            {"out-dir", "output directory", ""}})
    train_specs.push_back(extra);
  std::vector<OptionSpec> experiment_specs = kTrainingOptions;
  for (auto& s : experiment_specs) {
    if (s.key == "epochs") s.fallback = "8";
  }
  for (auto extra : std::vector<OptionSpec>{{"spec", "toy corpus spec file", ""},
                                            {"variants", "variants to compare", "shared,target,source,paired"},
                                            {"seed", "base seed; run k uses seed + k", "1"},
                                            {"seeds", "models per variant", "5"},
                                            {"beam", "beam size, 1 is greedy", "1"},
                                            {"max-len", "decode length cap, 0 means 3 * source + 10", "0"},
                                            {"jobs", "parallel training runs", "1"},
                                            {"out-dir", "output directory", ""}})
    experiment_specs.push_back(extra);

  add("gen-toy", "generate a synthetic multilingual corpus",
      {{"spec", "toy corpus spec file", ""}, {"seed", "override the spec seed", ""}, {"out-dir", "output directory", ""}},
      cmd_gen_toy);
  add("learn-bpe", "learn joint BPE merge rules",
      {{"input", "comma-separated text files", ""},
       {"merges", "number of merges", "10000"},
       {"min-count", "stop when the best pair is rarer", "1"},
       {"output", "codes file", ""}},
      cmd_learn_bpe);
  add("apply-bpe", "segment text with learned codes",
      {{"codes", "codes file", ""}, {"input", "text file", ""}, {"output", "output file; stdout if absent", ""}},
      cmd_apply_bpe);
  add("prepare", "add task tokens and build vocabularies",
      {{"variant", "shared|target|source|paired", ""},
       {"data-dir", "directory with <split>.<S>-<T>.src/.tgt", ""},
       {"pairs", "comma-separated language pairs", ""},
       {"languages", "language list; defaults to those in --pairs", ""},
       {"split", "train, valid or test", "train"},
       {"codes", "BPE codes", ""},
       {"out-dir", "output directory", ""}},
      cmd_prepare);
  add("train", "train one model", train_specs, cmd_train);
  add("translate", "decode a file",
      {{"checkpoint", "model checkpoint", ""},
       {"input", "source text, one sentence per line", ""},
       {"direction", "S-T", ""},
       {"beam", "beam size, 1 is greedy", "1"},
       {"max-len", "decode length cap, 0 means 3 * source + 10", "0"},
       {"codes", "BPE codes", ""},
       {"output", "output file; stdout if absent", ""}},
      cmd_translate);
  add("score", "corpus BLEU", {{"hyp", "hypothesis file", ""}, {"ref", "reference file", ""}}, cmd_score);
  add("export-attention", "decode one sentence and export its attention heatmap",
      {{"checkpoint", "model checkpoint", ""},
       {"direction", "S-T", ""},
       {"sentence", "source sentence", ""},
       {"input", "source file (with --line)", ""},
       {"line", "1-based line of --input", "1"},
       {"beam", "beam size, 1 is greedy", "1"},
       {"max-len", "decode length cap, 0 means 3 * source + 10", "0"},
       {"codes", "BPE codes", ""},
       {"output", "SVG path; the text dump goes next to it", ""}},
      cmd_export_attention);
  add("experiment", "train and evaluate all variants on a toy corpus", experiment_specs, cmd_experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "tsnmt: usage error: " << e.what() << "\n";
    return 2;
  }

  for (auto& [name, c] : commands) {
    if (!c.app->parsed()) continue;
    try {
      c.resolve();
      print_resolved(err, c);
      handlers[name](c, out);
      return 0;
    } catch (const Error& e) {
      err << "tsnmt: [" << e.module() << "] " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      err << "tsnmt: [runtime] " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}

}  // namespace tsnmt::app
