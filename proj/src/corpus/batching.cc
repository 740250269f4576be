#include "tsnmt/corpus/batching.h"

#include <algorithm>
#include <iterator>
#include <numeric>

#include "tsnmt/errors.h"
#include "tsnmt/random.h"

namespace tsnmt::corpus {

Batch materialize_batch(const std::vector<EncodedExample>& examples, std::vector<std::size_t> indices) {
  if (indices.empty()) throw ContractError("empty batch");
  Batch b;
  b.task = examples[indices.front()].task;
  std::vector<std::vector<int>> src, tgt_in, tgt_out;
  for (std::size_t i : indices) {
    const auto& ex = examples[i];
    if (!(ex.task == b.task)) throw ContractError("batch mixes tasks " + b.task.str() + " and " + ex.task.str());
    src.push_back(ex.src);
    std::vector<int> in{Vocab::kBos};
    in.insert(in.end(), ex.tgt.begin(), ex.tgt.end());
    std::vector<int> out(ex.tgt.begin(), ex.tgt.end());
    out.push_back(Vocab::kEos);
    tgt_in.push_back(std::move(in));
    tgt_out.push_back(std::move(out));
    b.token_count += ex.token_count();
  }
  b.src = PaddedIds::from_sequences(src, Vocab::kEos);
  b.tgt_in = PaddedIds::from_sequences(tgt_in, Vocab::kEos);
  b.tgt_out = PaddedIds::from_sequences(tgt_out, Vocab::kEos);
  b.examples = std::move(indices);
  return b;
}

std::vector<Batch> make_batches(const std::vector<EncodedExample>& examples, const std::vector<std::size_t>& order,
                                std::size_t cap_tokens) {
  std::vector<Batch> out;
  std::vector<std::size_t> current;
  std::size_t tokens = 0;
  auto flush = [&] {
    if (!current.empty()) out.push_back(materialize_batch(examples, std::move(current)));
    current.clear();
    tokens = 0;
  };
  for (std::size_t i : order) {
    const auto& ex = examples.at(i);
    const std::size_t n = ex.token_count();
    if (n > cap_tokens)
      throw OversizeExampleError("example " + std::to_string(i) + " has " + std::to_string(n) + " tokens, cap is " +
                                 std::to_string(cap_tokens));
    if (!current.empty() && (tokens + n > cap_tokens || !(examples[current.front()].task == ex.task))) flush();
    current.push_back(i);
    tokens += n;
  }
  flush();
  return out;
}

std::vector<Batch> make_batches(const std::vector<EncodedExample>& examples, std::size_t cap_tokens) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  return make_batches(examples, order, cap_tokens);
}

std::vector<std::size_t> shuffle_epoch(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "shuffle/" + std::to_string(epoch)));
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

namespace {

// Packs each direction separately so that batch boundaries do not depend on
// how the variant maps directions to attention keys.
std::vector<Batch> batches_by_direction(const std::vector<EncodedExample>& examples, std::vector<std::size_t> order,
                                        std::size_t cap_tokens) {
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return examples[a].direction < examples[b].direction; });
  std::vector<Batch> out;
  for (auto first = order.begin(); first != order.end();) {
    const auto& dir = examples[*first].direction;
    auto last = std::find_if(first, order.end(), [&](std::size_t i) { return !(examples[i].direction == dir); });
    auto group = make_batches(examples, std::vector<std::size_t>(first, last), cap_tokens);
    std::move(group.begin(), group.end(), std::back_inserter(out));
    first = last;
  }
  return out;
}

}  // namespace

std::vector<Batch> epoch_batches(const std::vector<EncodedExample>& examples, std::size_t cap_tokens, std::uint64_t seed,
                                 std::uint64_t epoch) {
  auto batches = batches_by_direction(examples, shuffle_epoch(examples.size(), seed, epoch), cap_tokens);
  Rng rng(derive_seed(seed, "batches/" + std::to_string(epoch)));
  rng.shuffle(std::span<Batch>(batches));
  return batches;
}

std::vector<Batch> evaluation_batches(const std::vector<EncodedExample>& examples, std::size_t cap_tokens) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  return batches_by_direction(examples, std::move(order), cap_tokens);
}

}  // namespace tsnmt::corpus
