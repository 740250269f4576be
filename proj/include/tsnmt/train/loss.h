#pragma once

#include "tsnmt/corpus/batching.h"
#include "tsnmt/model/nmt_model.h"

namespace tsnmt::train {

template <class T>
struct BatchLoss {
  Expr<T> loss;            // summed negative log-likelihood
  std::size_t tokens = 0;  // real target tokens, sentence-end included
};

// Teacher-forced NLL of a task-homogeneous batch.
template <class T>
BatchLoss<T> compute_loss(Graph<T>& g, ModelParams<T>& params, const corpus::Batch& batch);

}  // namespace tsnmt::train
