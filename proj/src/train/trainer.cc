#include "tsnmt/train/trainer.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "tsnmt/errors.h"
#include "tsnmt/train/loss.h"

namespace tsnmt::train {

TrainingConfig TrainingConfig::desk() {
  TrainingConfig c;
  c.d_emb = 64;
  c.d_hidden = 64;
  c.batch_tokens = 500;
  c.init_range = 0.3;
  return c;
}

void TrainingConfig::validate() const {
  if (d_emb == 0 || d_hidden == 0) throw ConfigError("dimensions must be positive");
  if (layers != 1) throw ConfigError("only a single recurrent layer is supported");
  if (batch_tokens == 0) throw ConfigError("batch token cap must be positive");
  if (validations_per_epoch == 0) throw ConfigError("validations per epoch must be positive");
  if (clip_norm < 0) throw ConfigError("clip norm must be non-negative");
  if (!(init_range > 0)) throw ConfigError("initialization range must be positive");
  if (!(adam.learning_rate > 0)) throw ConfigError("learning rate must be positive");
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

void MetricsLog::add(const MetricsRow& row) {
  for (auto it = rows_.rbegin(); it != rows_.rend(); ++it)
    if (it->seed == row.seed) {
      if (row.examples <= it->examples) throw ContractError("metrics rows must advance examples-seen per seed");
      break;
    }
  rows_.push_back(row);
}

std::string MetricsLog::to_tsv() const {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : rows_) {
    out += std::to_string(r.seed) + "\t" + fmt("%.4f", r.epoch) + "\t" + std::to_string(r.examples) + "\t" +
           fmt("%.6f", r.train_nll) + "\t" + fmt("%.6f", r.val_ppl) + "\t" + (r.val_score ? fmt("%.4f", *r.val_score) : "-") +
           "\n";
  }
  return out;
}

MetricsLog MetricsLog::parse_tsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw ParseError("metrics log lacks the expected header");
  MetricsLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream f(line);
    MetricsRow r;
    std::string score;
    if (!(f >> r.seed >> r.epoch >> r.examples >> r.train_nll >> r.val_ppl >> score))
      throw ParseError("malformed metrics row: " + line);
    if (score != "-") r.val_score = std::stod(score);
    log.add(r);
  }
  return log;
}

void MetricsLog::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << to_tsv();
}

double validation_perplexity(const ModelParams<float>& params, const std::vector<corpus::Batch>& batches) {
  auto& p = const_cast<ModelParams<float>&>(params);
  double nll = 0;
  std::size_t tokens = 0;
  Graph<float> g;
  for (const auto& b : batches) {
    g.clear();
    auto loss = compute_loss(g, p, b);
    nll += loss.loss.value()[0];
    tokens += loss.tokens;
  }
  if (tokens == 0) throw ContractError("validation set has no target tokens");
  return std::exp(nll / static_cast<double>(tokens));
}

Trainer::Trainer(TrainingConfig config, ModelParams<float> params, const std::vector<corpus::EncodedExample>& train,
                 const std::vector<corpus::EncodedExample>& valid, std::uint64_t seed)
    : config_(std::move(config)), params_(std::move(params)), train_(train), seed_(seed), adam_(config_.adam) {
  config_.validate();
  if (train_.empty()) throw ConfigError("no training examples");
  if (!valid.empty()) valid_batches_ = corpus::evaluation_batches(valid, config_.batch_tokens);
}

double Trainer::validate() const {
  if (valid_batches_.empty()) return std::numeric_limits<double>::quiet_NaN();
  return validation_perplexity(params_, valid_batches_);
}

double Trainer::step(const corpus::Batch& batch) {
  params_.zero_grad();
  Graph<float> g;
  auto loss = compute_loss(g, params_, batch);
  const double value = loss.loss.value()[0];
  if (!std::isfinite(value)) throw NumericError("non-finite loss " + std::to_string(value) + " on task " + batch.task.str());
  g.backward(loss.loss);
  auto ps = params_.parameters();
  if (config_.clip_norm > 0) clip_gradients(ps, config_.clip_norm);
  adam_.update(ps);
  return value;
}

std::vector<MetricsRow> Trainer::train_epoch() {
  const auto batches = corpus::epoch_batches(train_, config_.batch_tokens, seed_, epoch_);
  const std::size_t n = batches.size();
  const std::size_t v = std::min(config_.validations_per_epoch, n);
  std::vector<MetricsRow> rows;
  double nll = 0;
  std::size_t tokens = 0, next_check = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = batches[i];
    double value;
    try {
      value = step(b);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch_) + ", batch " + std::to_string(i) +
                         " of " + std::to_string(n) + ", " + std::to_string(b.size()) + " sentences)");
    }
    nll += value;
    for (const auto& m : b.tgt_out.mask)
      for (auto x : m) tokens += x;
    examples_ += b.size();
    if (i + 1 == next_check * n / v) {
      ++next_check;
      MetricsRow row;
      row.seed = seed_;
      row.epoch = static_cast<double>(epoch_) + static_cast<double>(i + 1) / static_cast<double>(n);
      row.examples = examples_;
      row.train_nll = tokens ? nll / static_cast<double>(tokens) : 0.0;
      row.val_ppl = validate();
      if (score_fn_) row.val_score = score_fn_(params_);
      if (!best_ || row.val_ppl < best_ppl_) {
        best_ = params_;
        best_ppl_ = row.val_ppl;
      }
      log_.add(row);
      rows.push_back(row);
      nll = 0;
      tokens = 0;
    }
  }
  ++epoch_;
  return rows;
}

void Trainer::train() {
  while (epoch_ < config_.epochs) train_epoch();
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.params = params_;
  c.adam = adam_;
  c.metadata["seed"] = std::to_string(seed_);
  c.metadata["epochs_done"] = std::to_string(epoch_);
  c.metadata["examples_seen"] = std::to_string(examples_);
  return c;
}

void Trainer::resume(const Checkpoint& ckpt) {
  params_ = ckpt.params;
  adam_ = ckpt.adam;
  auto get = [&](const char* k) -> std::uint64_t {
    auto it = ckpt.metadata.find(k);
    return it == ckpt.metadata.end() ? 0 : std::stoull(it->second);
  };
  epoch_ = get("epochs_done");
  examples_ = get("examples_seen");
  best_.reset();
}

}  // namespace tsnmt::train
