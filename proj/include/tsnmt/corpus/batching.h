#pragma once

#include <cstdint>
#include <vector>

#include "tsnmt/corpus/corpus.h"
#include "tsnmt/model/nmt_model.h"

namespace tsnmt::corpus {

// A task-homogeneous group of examples. Targets are shifted for teacher
// forcing: decoder input is <s> y..., output is y... </s>; padding uses the
// sentence-end id with mask 0.
struct Batch {
  TaskKey task = TaskKey::shared();
  std::vector<std::size_t> examples;  // indices into the example list
  PaddedIds src;
  PaddedIds tgt_in;
  PaddedIds tgt_out;
  std::size_t token_count = 0;  // source + target tokens, padding excluded

  std::size_t size() const { return examples.size(); }
};

// Greedy in-order packing. A batch is closed when the next example would
// push it past `cap_tokens` or carries a different task key.
std::vector<Batch> make_batches(const std::vector<EncodedExample>& examples, std::size_t cap_tokens);
std::vector<Batch> make_batches(const std::vector<EncodedExample>& examples, const std::vector<std::size_t>& order,
                                std::size_t cap_tokens);

Batch materialize_batch(const std::vector<EncodedExample>& examples, std::vector<std::size_t> indices);

// Deterministic permutation of 0..n-1 keyed by (seed, epoch).
std::vector<std::size_t> shuffle_epoch(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

// One epoch of training batches: shuffle the examples, group them by
// translation direction (keeping shuffled order within a group), pack each
// group greedily, then shuffle the batch order. Every batch is homogeneous
// under every variant, and tasks arrive in random order in proportion to
// their share of the data.
std::vector<Batch> epoch_batches(const std::vector<EncodedExample>& examples, std::size_t cap_tokens, std::uint64_t seed,
                                 std::uint64_t epoch);

// Fixed batching for evaluation: grouped by direction, original order.
std::vector<Batch> evaluation_batches(const std::vector<EncodedExample>& examples, std::size_t cap_tokens);

}  // namespace tsnmt::corpus
