#include "tsnmt/train/loss.h"

#include "tsnmt/errors.h"

namespace tsnmt::train {

template <class T>
BatchLoss<T> compute_loss(Graph<T>& g, ModelParams<T>& params, const corpus::Batch& batch) {
  if (batch.tgt_in.length() == 0) throw ContractError("compute_loss: batch has no target positions");
  auto enc = encode(g, params, batch.src);
  Expr<T> state = enc.initial_state;
  BatchLoss<T> out;
  for (std::size_t t = 0; t < batch.tgt_in.length(); ++t) {
    auto step = decoder_step(g, params, batch.task, state, batch.tgt_in.ids[t], enc);
    auto nll = cross_entropy(step.logits, batch.tgt_out.ids[t], batch.tgt_out.mask[t]);
    out.loss = out.loss.valid() ? out.loss + nll : nll;
    for (auto m : batch.tgt_out.mask[t]) out.tokens += m;
    state = step.state;
  }
  return out;
}

template BatchLoss<float> compute_loss(Graph<float>&, ModelParams<float>&, const corpus::Batch&);
template BatchLoss<double> compute_loss(Graph<double>&, ModelParams<double>&, const corpus::Batch&);

}  // namespace tsnmt::train
