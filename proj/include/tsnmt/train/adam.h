#pragma once

#include <cstdint>
#include <vector>

#include "tsnmt/autodiff/graph.h"

namespace tsnmt::train {

using ad::Parameter;
using ad::Tensor;

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam. Moments are kept per parameter in the order the
// parameters are passed to update(); that order must not change.
template <class T>
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig config) : config_(config) {}

  void update(const std::vector<Parameter<T>*>& params);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }

  void restore(AdamConfig config, std::uint64_t step, std::vector<Tensor<T>> m, std::vector<Tensor<T>> v);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

// Scales all gradients so their global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
template <class T>
double clip_gradients(const std::vector<Parameter<T>*>& params, double max_norm);

}  // namespace tsnmt::train
