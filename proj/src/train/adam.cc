#include "tsnmt/train/adam.h"

#include <cmath>

#include "tsnmt/errors.h"

namespace tsnmt::train {

template <class T>
void AdamState<T>::update(const std::vector<Parameter<T>*>& params) {
  if (m_.empty()) {
    for (auto* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  if (m_.size() != params.size()) throw ContractError("Adam state tracks a different parameter list");
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    if (m.shape() != p.value.shape()) throw ContractError("Adam moment shape differs for " + p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      const double mi = b1 * m[i] + (1.0 - b1) * g;
      const double vi = b2 * v[i] + (1.0 - b2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double m_hat = mi / correction1;
      const double v_hat = vi / correction2;
      p.value[i] = static_cast<T>(p.value[i] - config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon));
    }
  }
}

template <class T>
void AdamState<T>::restore(AdamConfig config, std::uint64_t step, std::vector<Tensor<T>> m, std::vector<Tensor<T>> v) {
  if (m.size() != v.size()) throw ContractError("Adam moments disagree in length");
  config_ = config;
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

template <class T>
double clip_gradients(const std::vector<Parameter<T>*>& params, double max_norm) {
  double sq = 0;
  for (auto* p : params)
    for (T g : p->grad.values()) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto* p : params)
      for (T& g : p->grad.values()) g *= scale;
  }
  return norm;
}

template class AdamState<float>;
template class AdamState<double>;
template double clip_gradients(const std::vector<Parameter<float>*>&, double);
template double clip_gradients(const std::vector<Parameter<double>*>&, double);

}  // namespace tsnmt::train
