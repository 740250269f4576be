#include "tsnmt/app/experiment.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "tsnmt/errors.h"

namespace tsnmt::app {

namespace fs = std::filesystem;

PreparedData prepare_data(const std::vector<corpus::PairCorpus>& train, const std::vector<corpus::PairCorpus>& valid,
                          Variant variant, const std::vector<std::string>& languages) {
  PreparedData d;
  d.variant = variant;
  d.languages = languages;
  for (const auto& pc : train) {
    d.trained_directions.push_back(pc.pair);
    d.trained_directions.push_back({pc.pair.tgt, pc.pair.src});
  }
  const auto train_ex = corpus::prepare_examples(corpus::merge_bidirectional_corpus(train), nullptr, variant, languages);
  const auto valid_ex = corpus::prepare_examples(corpus::merge_bidirectional_corpus(valid), nullptr, variant, languages);
  d.src_vocab = corpus::build_source_vocab(train_ex, variant, languages);
  d.tgt_vocab = corpus::build_target_vocab(train_ex);
  d.train = corpus::encode_examples(train_ex, variant, languages, d.src_vocab, d.tgt_vocab);
  d.valid = corpus::encode_examples(valid_ex, variant, languages, d.src_vocab, d.tgt_vocab);
  return d;
}

ModelConfig model_config(const train::TrainingConfig& cfg, const PreparedData& data) {
  ModelConfig m;
  m.d_emb = cfg.d_emb;
  m.d_hidden = cfg.d_hidden;
  m.src_vocab = data.src_vocab.size();
  m.tgt_vocab = data.tgt_vocab.size();
  m.variant = data.variant;
  m.attention_query = cfg.attention_query;
  m.languages = data.languages;
  m.trained_directions = data.trained_directions;
  return m;
}

std::uint64_t run_seed(std::uint64_t seed, std::size_t k) { return seed + k; }

const VariantResult& ExperimentResult::variant(Variant v) const {
  for (const auto& r : variants)
    if (r.variant == v) return r;
  throw ConfigError(std::string("variant ") + variant_name(v) + " was not part of the experiment");
}

const eval::DirectionReport& ExperimentResult::report(Variant v, const Direction& d) const {
  const auto& vr = variant(v);
  for (const auto& r : vr.reports)
    if (r.direction == d) return r;
  throw ConfigError("direction " + d.str() + " was not evaluated");
}

namespace {

std::string run_name(Variant v, std::uint64_t seed) { return std::string(variant_name(v)) + ".seed" + std::to_string(seed); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.spec.validate();
  config.training.validate();
  if (config.training.seeds == 0) throw ConfigError("at least one seed is required");
  if (config.variants.empty()) throw ConfigError("no variants to run");

  const auto corpus = toy::generate_parallel_corpus(config.spec);
  const auto& langs = config.spec.languages;

  ExperimentResult result;
  for (const auto& d : config.spec.trained_directions()) {
    result.directions.push_back(d);
    result.zero_shot.push_back(false);
  }
  for (const auto& z : config.spec.zero_shot)
    for (const Direction& d : {z, Direction{z.tgt, z.src}}) {
      result.directions.push_back(d);
      result.zero_shot.push_back(true);
    }
  std::vector<eval::TestSet> tests;
  for (const auto& d : result.directions) {
    for (const auto& pc : corpus.test) {
      if (pc.pair == d) tests.push_back({d, pc.first, pc.second});
      else if (pc.pair.src == d.tgt && pc.pair.tgt == d.src) tests.push_back({d, pc.second, pc.first});
    }
  }

  if (!config.out_dir.empty()) {
    fs::create_directories(fs::path(config.out_dir) / "metrics");
    if (config.save_checkpoints) fs::create_directories(fs::path(config.out_dir) / "checkpoints");
    write_file(fs::path(config.out_dir) / "spec.cfg", config.spec.str());
  }

  std::vector<PreparedData> data;
  for (auto v : config.variants) data.push_back(prepare_data(corpus.train, corpus.valid, v, langs));

  struct Job {
    std::size_t variant_index;
    std::size_t seed_index;
  };
  std::vector<Job> jobs;
  for (std::size_t vi = 0; vi < config.variants.size(); ++vi)
    for (std::size_t k = 0; k < config.training.seeds; ++k) jobs.push_back({vi, k});

  result.variants.resize(config.variants.size());
  for (std::size_t vi = 0; vi < config.variants.size(); ++vi) {
    result.variants[vi].variant = config.variants[vi];
    result.variants[vi].runs.resize(config.training.seeds);
  }
  // translators[vi][k], filled by the jobs.
  std::vector<std::vector<std::optional<eval::Translator>>> translators(config.variants.size(),
                                                                         std::vector<std::optional<eval::Translator>>(config.training.seeds));

  auto run_job = [&](const Job& job) {
    const auto& d = data[job.variant_index];
    const std::uint64_t seed = run_seed(config.seed, job.seed_index);
    auto cfg = config.training;
    cfg.variant = d.variant;
    ModelParams<float> params(model_config(cfg, d));
    params.initialize(seed, cfg.init_range);
    train::Trainer trainer(cfg, std::move(params), d.train, d.valid, seed);
    trainer.train();
    auto& run = result.variants[job.variant_index].runs[job.seed_index];
    run.variant = d.variant;
    run.seed = seed;
    run.log = trainer.log();
    run.best_ppl = trainer.best_perplexity();
    if (!config.out_dir.empty() && config.save_checkpoints) {
      train::Checkpoint ckpt;
      ckpt.params = trainer.best_params();
      ckpt.src_vocab = d.src_vocab;
      ckpt.tgt_vocab = d.tgt_vocab;
      ckpt.metadata["seed"] = std::to_string(seed);
      ckpt.metadata["epochs_done"] = std::to_string(trainer.epochs_done());
      ckpt.metadata["examples_seen"] = std::to_string(trainer.examples_seen());
      ckpt.metadata["best_val_ppl"] = std::to_string(trainer.best_perplexity());
      train::save_checkpoint(ckpt, (fs::path(config.out_dir) / "checkpoints" / (run_name(d.variant, seed) + ".ckpt")).string());
    }
    translators[job.variant_index][job.seed_index].emplace(trainer.best_params(), d.src_vocab, d.tgt_vocab);
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(config.jobs, jobs.size()));
  if (workers == 1) {
    for (const auto& j : jobs) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < jobs.size();) {
          try {
            run_job(jobs[i]);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  auto decode = config.decode;
  decode.threads = std::max(decode.threads, config.jobs);
  for (std::size_t vi = 0; vi < config.variants.size(); ++vi) {
    std::vector<const eval::Translator*> models;
    for (const auto& t : translators[vi]) models.push_back(&*t);
    for (const auto& test : tests) result.variants[vi].reports.push_back(eval::evaluate_direction(models, test, decode));
  }

  if (!config.out_dir.empty()) {
    const fs::path out(config.out_dir);
    for (const auto& vr : result.variants) {
      train::MetricsLog combined;
      for (const auto& run : vr.runs) {
        run.log.save((out / "metrics" / (run_name(vr.variant, run.seed) + ".tsv")).string());
        for (const auto& row : run.log.rows()) combined.add(row);
      }
      combined.save((out / "metrics" / (std::string(variant_name(vr.variant)) + ".tsv")).string());
    }
    write_file(out / "results.tsv", results_tsv(result, ResultMetric::Bleu));
    write_file(out / "accuracy.tsv", results_tsv(result, ResultMetric::Accuracy));
    write_file(out / "entropy.tsv", results_tsv(result, ResultMetric::Entropy));
    write_file(out / "results.txt", results_text(result));
  }
  return result;
}

namespace {

double metric_value(const eval::DirectionReport& r, ResultMetric m) {
  switch (m) {
    case ResultMetric::Bleu: return r.mean_bleu;
    case ResultMetric::Accuracy: return 100.0 * r.mean_accuracy;
    case ResultMetric::Entropy: return r.mean_entropy;
  }
  return 0;
}

std::vector<std::vector<std::string>> table(const ExperimentResult& r, ResultMetric m) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"variant"};
  for (std::size_t i = 0; i < r.directions.size(); ++i) header.push_back(r.directions[i].str() + (r.zero_shot[i] ? "*" : ""));
  rows.push_back(header);
  for (const auto& vr : r.variants) {
    std::vector<std::string> row{variant_name(vr.variant)};
    for (const auto& rep : vr.reports) {
      if (rep.skipped) {
        row.push_back("n/a");
        continue;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, m == ResultMetric::Entropy ? "%.4f" : "%.2f", metric_value(rep, m));
      row.push_back(buf);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string results_tsv(const ExperimentResult& r, ResultMetric metric) {
  std::string out;
  for (const auto& row : table(r, metric)) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "\t" : "") + row[i];
    out += "\n";
  }
  return out;
}

std::string results_text(const ExperimentResult& r) {
  std::string out;
  const std::pair<ResultMetric, const char*> sections[] = {{ResultMetric::Bleu, "BLEU (mean over seeds)"},
                                                           {ResultMetric::Accuracy, "Exact-match accuracy, % (mean over seeds)"},
                                                           {ResultMetric::Entropy, "Attention entropy, nats (mean over seeds)"}};
  for (const auto& [metric, title] : sections) {
    const auto rows = table(r, metric);
    std::vector<std::size_t> width(rows[0].size(), 0);
    for (const auto& row : rows)
      for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    if (!out.empty()) out += "\n";
    out += std::string(title) + "\n";
    for (const auto& row : rows) {
      std::string line;
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::string cell = row[i];
        if (i == 0) cell += std::string(width[i] - cell.size(), ' ');
        else cell = std::string(width[i] - cell.size(), ' ') + cell;
        line += (i ? "  " : "") + cell;
      }
      out += line + "\n";
    }
  }
  out += "\n* zero-shot direction\n";
  return out;
}

}  // namespace tsnmt::app
