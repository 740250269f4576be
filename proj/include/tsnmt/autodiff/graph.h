#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsnmt/autodiff/tensor.h"

namespace tsnmt::ad {

// A learned tensor together with its gradient accumulator. Parameters live
// outside any graph; a graph only references them for the duration of one
// forward/backward pass.
template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}

  void zero_grad() { grad.fill(T(0)); }
  std::size_t size() const { return value.size(); }
};

enum class OpKind {
  Input,
  Parameter,
  MatMul,
  Add,
  Sub,
  CMul,
  MulColumns,
  Tanh,
  Sigmoid,
  Softmax,
  CrossEntropy,
  Lookup,
  ConcatRows,
  PickRow,
  SelectColumns,
  Sum,
  Custom,
};

const char* op_name(OpKind kind);

template <class T>
class Graph;

// Lightweight handle to a node of a graph.
template <class T>
class Expr {
 public:
  Expr() = default;
  Expr(Graph<T>* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph<T>& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor<T>& value() const;
  const Tensor<T>& grad() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Graph<T>* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Backward rule for a user-defined op: given input values and the output
// gradient, accumulate into the input gradients.
template <class T>
using CustomBackward = std::function<void(std::span<const Tensor<T>* const> inputs, const Tensor<T>& output,
                                          const Tensor<T>& output_grad, std::span<Tensor<T>* const> input_grads)>;

// Dynamically built computation graph. Values are computed eagerly as nodes
// are created; creation order is a topological order. One graph per batch:
// build, call backward(), then clear() or discard.
template <class T>
class Graph {
 public:
  struct Node {
    OpKind kind = OpKind::Input;
    std::vector<std::size_t> inputs;
    Tensor<T> value;
    Tensor<T> grad;
    Parameter<T>* param = nullptr;
    std::vector<int> ints;
    std::vector<std::uint8_t> mask;
    Tensor<T> scratch;
    CustomBackward<T> custom;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Expr<T> input(Tensor<T> value);
  // Registers `p` on first use; later calls return the same node so that
  // every use of a parameter accumulates into one gradient.
  Expr<T> parameter(Parameter<T>& p);

  void backward(Expr<T> loss);
  void clear();

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  const std::vector<Parameter<T>*>& parameters() const { return registry_order_; }

  const Tensor<T>& value(std::size_t id) const;
  const Tensor<T>& grad(std::size_t id) const;

  // Internal: used by op constructors.
  Expr<T> add_node(Node node);
  Tensor<T>& mutable_grad(std::size_t id);

 private:
  void backward_node(std::size_t id);

  std::vector<Node> nodes_;
  std::vector<std::uint8_t> touched_;
  std::unordered_map<const Parameter<T>*, std::size_t> registry_;
  std::vector<Parameter<T>*> registry_order_;
};

template <class T>
const Tensor<T>& Expr<T>::value() const {
  return graph_->value(id_);
}
template <class T>
const Tensor<T>& Expr<T>::grad() const {
  return graph_->grad(id_);
}

// ---- operations -----------------------------------------------------------

template <class T>
Expr<T> matmul(Expr<T> a, Expr<T> b);
// Elementwise sum. `b` may also be a column vector matching a's row count,
// in which case it is broadcast across the columns of `a`.
template <class T>
Expr<T> add(Expr<T> a, Expr<T> b);
template <class T>
Expr<T> sub(Expr<T> a, Expr<T> b);
template <class T>
Expr<T> cmul(Expr<T> a, Expr<T> b);
// out[r][c] = a[r][c] * w[0][c] for a row vector w.
template <class T>
Expr<T> mul_columns(Expr<T> a, Expr<T> w);
template <class T>
Expr<T> tanh(Expr<T> x);
template <class T>
Expr<T> sigmoid(Expr<T> x);
// Column-wise softmax. Positions with mask 0 get probability exactly 0; an
// empty mask means all positions are live.
template <class T>
Expr<T> softmax(Expr<T> x, std::vector<std::uint8_t> mask = {});
// Sum over columns b with mask[b] != 0 of -log softmax(logits[:, b])[targets[b]].
template <class T>
Expr<T> cross_entropy(Expr<T> logits, std::vector<int> targets, std::vector<std::uint8_t> mask = {});
// Gathers rows `ids` of a V x d table into the columns of a d x B result.
template <class T>
Expr<T> lookup(Expr<T> table, std::vector<int> ids);
template <class T>
Expr<T> concat_rows(std::span<const Expr<T>> parts);
template <class T>
Expr<T> pick_row(Expr<T> x, std::size_t row);
// Column b comes from `a` when mask[b] != 0, otherwise from `b`.
template <class T>
Expr<T> select_columns(std::vector<std::uint8_t> mask, Expr<T> a, Expr<T> b);
template <class T>
Expr<T> sum(Expr<T> x);
template <class T>
Expr<T> custom(std::vector<Expr<T>> inputs, Tensor<T> value, CustomBackward<T> backward);

template <class T>
Expr<T> operator+(Expr<T> a, Expr<T> b) {
  return add(a, b);
}
template <class T>
Expr<T> operator-(Expr<T> a, Expr<T> b) {
  return sub(a, b);
}

}  // namespace tsnmt::ad
