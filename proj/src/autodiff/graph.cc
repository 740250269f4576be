#include "tsnmt/autodiff/graph.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "tsnmt/errors.h"

namespace tsnmt::ad {

namespace {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapConst = Eigen::Map<const RowMatrix<T>>;
template <class T>
using MapMut = Eigen::Map<RowMatrix<T>>;

template <class T>
MapConst<T> view(const Tensor<T>& t) {
  return MapConst<T>(t.data(), t.rows(), t.cols());
}
template <class T>
MapMut<T> view(Tensor<T>& t) {
  return MapMut<T>(t.data(), t.rows(), t.cols());
}

std::string shapes(const Shape& a, const Shape& b) { return "[" + a.str() + "] and [" + b.str() + "]"; }

template <class T>
Graph<T>& same_graph(Expr<T> a, Expr<T> b) {
  if (!a.valid() || !b.valid() || &a.graph() != &b.graph()) throw ContractError("operands belong to different graphs");
  return a.graph();
}

template <class T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
typename Graph<T>::Node make_node(OpKind kind, std::vector<std::size_t> inputs, Tensor<T> value) {
  typename Graph<T>::Node n;
  n.kind = kind;
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  return n;
}

bool column_vector_of(const Shape& b, const Shape& a) {
  return b.cols() == 1 && b.rows() == a.rows() && a.cols() > 1;
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Input: return "input";
    case OpKind::Parameter: return "parameter";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::CMul: return "cmul";
    case OpKind::MulColumns: return "mul_columns";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Softmax: return "softmax";
    case OpKind::CrossEntropy: return "cross_entropy";
    case OpKind::Lookup: return "lookup";
    case OpKind::ConcatRows: return "concat_rows";
    case OpKind::PickRow: return "pick_row";
    case OpKind::SelectColumns: return "select_columns";
    case OpKind::Sum: return "sum";
    case OpKind::Custom: return "custom";
  }
  return "?";
}

// ---- Graph ------------------------------------------------------------------

template <class T>
Expr<T> Graph<T>::add_node(Node node) {
  nodes_.push_back(std::move(node));
  return Expr<T>(this, nodes_.size() - 1);
}

template <class T>
Expr<T> Graph<T>::input(Tensor<T> value) {
  return add_node(make_node<T>(OpKind::Input, {}, std::move(value)));
}

template <class T>
Expr<T> Graph<T>::parameter(Parameter<T>& p) {
  if (auto it = registry_.find(&p); it != registry_.end()) return Expr<T>(this, it->second);
  if (p.grad.shape() != p.value.shape()) p.grad = Tensor<T>(p.value.shape());
  Node n;
  n.kind = OpKind::Parameter;
  n.param = &p;
  auto e = add_node(std::move(n));
  registry_.emplace(&p, e.id());
  registry_order_.push_back(&p);
  return e;
}

template <class T>
const Tensor<T>& Graph<T>::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.param ? n.param->value : n.value;
}

template <class T>
const Tensor<T>& Graph<T>::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.param ? n.param->grad : n.grad;
}

template <class T>
Tensor<T>& Graph<T>::mutable_grad(std::size_t id) {
  Node& n = nodes_[id];
  touched_[id] = 1;
  return n.param ? n.param->grad : n.grad;
}

template <class T>
void Graph<T>::clear() {
  nodes_.clear();
  touched_.clear();
  registry_.clear();
  registry_order_.clear();
}

template <class T>
void Graph<T>::backward(Expr<T> loss) {
  if (&loss.graph() != this) throw ContractError("loss belongs to a different graph");
  if (loss.value().size() != 1)
    throw ContractError("backward requires a scalar loss, got shape [" + loss.shape().str() + "]");
  const std::size_t last = loss.id();
  touched_.assign(nodes_.size(), 0);
  for (std::size_t i = 0; i <= last; ++i) {
    Node& n = nodes_[i];
    if (!n.param) n.grad = Tensor<T>(n.value.shape());
  }
  mutable_grad(last)[0] += T(1);
  for (std::size_t i = last + 1; i-- > 0;) {
    if (touched_[i]) backward_node(i);
  }
}

template <class T>
void Graph<T>::backward_node(std::size_t id) {
  Node& n = nodes_[id];
  const Tensor<T>& g = n.param ? n.param->grad : n.grad;
  const Tensor<T>& y = value(id);
  auto in_value = [&](std::size_t k) -> const Tensor<T>& { return value(n.inputs[k]); };
  switch (n.kind) {
    case OpKind::Input:
    case OpKind::Parameter:
      break;
    case OpKind::MatMul: {
      const auto& a = in_value(0);
      const auto& b = in_value(1);
      view(mutable_grad(n.inputs[0])).noalias() += view(g) * view(b).transpose();
      view(mutable_grad(n.inputs[1])).noalias() += view(a).transpose() * view(g);
      break;
    }
    case OpKind::Add: {
      auto& ga = mutable_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      auto& gb = mutable_grad(n.inputs[1]);
      if (gb.size() == g.size()) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      } else {
        const std::size_t cols = g.cols();
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < cols; ++c) gb[r] += g[r * cols + c];
      }
      break;
    }
    case OpKind::Sub: {
      auto& ga = mutable_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      auto& gb = mutable_grad(n.inputs[1]);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      break;
    }
    case OpKind::CMul: {
      const auto& a = in_value(0);
      const auto& b = in_value(1);
      auto& ga = mutable_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
      auto& gb = mutable_grad(n.inputs[1]);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
      break;
    }
    case OpKind::MulColumns: {
      const auto& a = in_value(0);
      const auto& w = in_value(1);
      const std::size_t cols = g.cols();
      auto& ga = mutable_grad(n.inputs[0]);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r * cols + c] * w[c];
      auto& gw = mutable_grad(n.inputs[1]);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) gw[c] += g[r * cols + c] * a[r * cols + c];
      break;
    }
    case OpKind::Tanh: {
      auto& gx = mutable_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (T(1) - y[i] * y[i]);
      break;
    }
    case OpKind::Sigmoid: {
      auto& gx = mutable_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
      break;
    }
    case OpKind::Softmax: {
      auto& gx = mutable_grad(n.inputs[0]);
      const std::size_t rows = y.rows(), cols = y.cols();
      for (std::size_t c = 0; c < cols; ++c) {
        T dot = 0;
        for (std::size_t r = 0; r < rows; ++r) dot += y[r * cols + c] * g[r * cols + c];
        for (std::size_t r = 0; r < rows; ++r) gx[r * cols + c] += y[r * cols + c] * (g[r * cols + c] - dot);
      }
      break;
    }
    case OpKind::CrossEntropy: {
      const Tensor<T>& probs = n.scratch;
      auto& gx = mutable_grad(n.inputs[0]);
      const std::size_t rows = probs.rows(), cols = probs.cols();
      for (std::size_t c = 0; c < cols; ++c) {
        if (!n.mask.empty() && !n.mask[c]) continue;
        for (std::size_t r = 0; r < rows; ++r) gx[r * cols + c] += g[0] * probs[r * cols + c];
        gx[static_cast<std::size_t>(n.ints[c]) * cols + c] -= g[0];
      }
      break;
    }
    case OpKind::Lookup: {
      auto& gt = mutable_grad(n.inputs[0]);
      const std::size_t d = g.rows(), cols = g.cols();
      for (std::size_t c = 0; c < cols; ++c) {
        T* row = gt.data() + static_cast<std::size_t>(n.ints[c]) * d;
        for (std::size_t r = 0; r < d; ++r) row[r] += g[r * cols + c];
      }
      break;
    }
    case OpKind::ConcatRows: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        auto& gp = mutable_grad(n.inputs[k]);
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
        offset += gp.size();
      }
      break;
    }
    case OpKind::PickRow: {
      auto& gx = mutable_grad(n.inputs[0]);
      const std::size_t cols = g.cols();
      const std::size_t row = static_cast<std::size_t>(n.ints[0]);
      for (std::size_t c = 0; c < cols; ++c) gx[row * cols + c] += g[c];
      break;
    }
    case OpKind::SelectColumns: {
      auto& ga = mutable_grad(n.inputs[0]);
      auto& gb = mutable_grad(n.inputs[1]);
      const std::size_t cols = g.cols();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) (n.mask[c] ? ga : gb)[r * cols + c] += g[r * cols + c];
      break;
    }
    case OpKind::Sum: {
      auto& gx = mutable_grad(n.inputs[0]);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
      break;
    }
    case OpKind::Custom: {
      std::vector<const Tensor<T>*> ins;
      std::vector<Tensor<T>*> gins;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        ins.push_back(&value(n.inputs[k]));
        gins.push_back(&mutable_grad(n.inputs[k]));
      }
      n.custom(ins, y, g, gins);
      break;
    }
  }
}

// ---- operations -------------------------------------------------------------

template <class T>
Expr<T> matmul(Expr<T> a, Expr<T> b) {
  auto& g = same_graph(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows()) throw DimensionError("matmul: inner dimensions differ for " + shapes(av.shape(), bv.shape()));
  Tensor<T> out(Shape{av.rows(), bv.cols()});
  view(out).noalias() = view(av) * view(bv);
  return g.add_node(make_node<T>(OpKind::MatMul, {a.id(), b.id()}, std::move(out)));
}

template <class T>
Expr<T> add(Expr<T> a, Expr<T> b) {
  auto& g = same_graph(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  Tensor<T> out(av.shape());
  if (av.size() == bv.size() && av.rows() == bv.rows()) {
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  } else if (column_vector_of(bv.shape(), av.shape())) {
    const std::size_t cols = av.cols();
    for (std::size_t r = 0; r < av.rows(); ++r)
      for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = av[r * cols + c] + bv[r];
  } else {
    throw DimensionError("add: shape mismatch " + shapes(av.shape(), bv.shape()));
  }
  return g.add_node(make_node<T>(OpKind::Add, {a.id(), b.id()}, std::move(out)));
}

template <class T>
Expr<T> sub(Expr<T> a, Expr<T> b) {
  auto& g = same_graph(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.size() != bv.size() || av.rows() != bv.rows()) throw DimensionError("sub: shape mismatch " + shapes(av.shape(), bv.shape()));
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  return g.add_node(make_node<T>(OpKind::Sub, {a.id(), b.id()}, std::move(out)));
}

template <class T>
Expr<T> cmul(Expr<T> a, Expr<T> b) {
  auto& g = same_graph(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.size() != bv.size() || av.rows() != bv.rows()) throw DimensionError("cmul: shape mismatch " + shapes(av.shape(), bv.shape()));
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return g.add_node(make_node<T>(OpKind::CMul, {a.id(), b.id()}, std::move(out)));
}

template <class T>
Expr<T> mul_columns(Expr<T> a, Expr<T> w) {
  auto& g = same_graph(a, w);
  const auto& av = a.value();
  const auto& wv = w.value();
  if (wv.size() != av.cols() || (wv.rows() != 1 && av.cols() != 1))
    throw DimensionError("mul_columns: weights " + shapes(wv.shape(), av.shape()));
  Tensor<T> out(av.shape());
  const std::size_t cols = av.cols();
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = av[r * cols + c] * wv[c];
  return g.add_node(make_node<T>(OpKind::MulColumns, {a.id(), w.id()}, std::move(out)));
}

template <class T>
Expr<T> tanh(Expr<T> x) {
  const auto& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::tanh(xv[i]);
  return x.graph().add_node(make_node<T>(OpKind::Tanh, {x.id()}, std::move(out)));
}

template <class T>
Expr<T> sigmoid(Expr<T> x) {
  const auto& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = stable_sigmoid(xv[i]);
  return x.graph().add_node(make_node<T>(OpKind::Sigmoid, {x.id()}, std::move(out)));
}

template <class T>
Expr<T> softmax(Expr<T> x, std::vector<std::uint8_t> mask) {
  const auto& xv = x.value();
  if (xv.empty()) throw DimensionError("softmax: empty input");
  if (!mask.empty() && mask.size() != xv.size())
    throw DimensionError("softmax: mask length " + std::to_string(mask.size()) + " for shape [" + xv.shape().str() + "]");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  Tensor<T> out(xv.shape());
  for (std::size_t c = 0; c < cols; ++c) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t r = 0; r < rows; ++r)
      if (mask.empty() || mask[r * cols + c]) mx = std::max(mx, xv[r * cols + c]);
    if (mx == -std::numeric_limits<T>::infinity()) throw ContractError("softmax: column " + std::to_string(c) + " fully masked");
    T total = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = r * cols + c;
      const T e = (mask.empty() || mask[i]) ? std::exp(xv[i] - mx) : T(0);
      out[i] = e;
      total += e;
    }
    for (std::size_t r = 0; r < rows; ++r) out[r * cols + c] /= total;
  }
  auto n = make_node<T>(OpKind::Softmax, {x.id()}, std::move(out));
  n.mask = std::move(mask);
  return x.graph().add_node(std::move(n));
}

template <class T>
Expr<T> cross_entropy(Expr<T> logits, std::vector<int> targets, std::vector<std::uint8_t> mask) {
  const auto& xv = logits.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (targets.size() != cols)
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + std::to_string(cols) + " columns");
  if (!mask.empty() && mask.size() != cols) throw DimensionError("cross_entropy: mask length mismatch");
  Tensor<T> probs(xv.shape());
  T loss = 0;
  for (std::size_t c = 0; c < cols; ++c) {
    const bool live = mask.empty() || mask[c];
    if (live && (targets[c] < 0 || static_cast<std::size_t>(targets[c]) >= rows))
      throw IndexError("cross_entropy: target " + std::to_string(targets[c]) + " outside vocabulary of " + std::to_string(rows));
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t r = 0; r < rows; ++r) mx = std::max(mx, xv[r * cols + c]);
    T total = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      const T e = std::exp(xv[r * cols + c] - mx);
      probs[r * cols + c] = e;
      total += e;
    }
    for (std::size_t r = 0; r < rows; ++r) probs[r * cols + c] /= total;
    if (live) loss += (mx + std::log(total)) - xv[static_cast<std::size_t>(targets[c]) * cols + c];
  }
  auto n = make_node<T>(OpKind::CrossEntropy, {logits.id()}, Tensor<T>(Shape{1}, std::vector<T>{loss}));
  n.ints = std::move(targets);
  n.mask = std::move(mask);
  n.scratch = std::move(probs);
  return logits.graph().add_node(std::move(n));
}

template <class T>
Expr<T> lookup(Expr<T> table, std::vector<int> ids) {
  const auto& tv = table.value();
  if (ids.empty()) throw DimensionError("lookup: no ids");
  const std::size_t vocab = tv.rows(), d = tv.cols(), cols = ids.size();
  Tensor<T> out(Shape{d, cols});
  for (std::size_t c = 0; c < cols; ++c) {
    if (ids[c] < 0 || static_cast<std::size_t>(ids[c]) >= vocab)
      throw IndexError("lookup: id " + std::to_string(ids[c]) + " outside table of " + std::to_string(vocab) + " rows");
    const T* row = tv.data() + static_cast<std::size_t>(ids[c]) * d;
    for (std::size_t r = 0; r < d; ++r) out[r * cols + c] = row[r];
  }
  auto n = make_node<T>(OpKind::Lookup, {table.id()}, std::move(out));
  n.ints = std::move(ids);
  return table.graph().add_node(std::move(n));
}

template <class T>
Expr<T> concat_rows(std::span<const Expr<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  auto& g = parts[0].graph();
  const std::size_t cols = parts[0].value().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    if (&p.graph() != &g) throw ContractError("operands belong to different graphs");
    if (p.value().cols() != cols) throw DimensionError("concat_rows: column mismatch " + shapes(parts[0].shape(), p.shape()));
    rows += p.value().rows();
    ids.push_back(p.id());
  }
  Tensor<T> out(Shape{rows, cols});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    std::copy(v.data(), v.data() + v.size(), out.data() + offset);
    offset += v.size();
  }
  return g.add_node(make_node<T>(OpKind::ConcatRows, std::move(ids), std::move(out)));
}

template <class T>
Expr<T> pick_row(Expr<T> x, std::size_t row) {
  const auto& xv = x.value();
  if (row >= xv.rows()) throw IndexError("pick_row: row " + std::to_string(row) + " of [" + xv.shape().str() + "]");
  const std::size_t cols = xv.cols();
  Tensor<T> out(Shape{1, cols});
  std::copy(xv.data() + row * cols, xv.data() + (row + 1) * cols, out.data());
  auto n = make_node<T>(OpKind::PickRow, {x.id()}, std::move(out));
  n.ints = {static_cast<int>(row)};
  return x.graph().add_node(std::move(n));
}

template <class T>
Expr<T> select_columns(std::vector<std::uint8_t> mask, Expr<T> a, Expr<T> b) {
  auto& g = same_graph(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.shape() != bv.shape()) throw DimensionError("select_columns: shape mismatch " + shapes(av.shape(), bv.shape()));
  if (mask.size() != av.cols()) throw DimensionError("select_columns: mask length mismatch");
  Tensor<T> out(av.shape());
  const std::size_t cols = av.cols();
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = mask[c] ? av[r * cols + c] : bv[r * cols + c];
  auto n = make_node<T>(OpKind::SelectColumns, {a.id(), b.id()}, std::move(out));
  n.mask = std::move(mask);
  return g.add_node(std::move(n));
}

template <class T>
Expr<T> sum(Expr<T> x) {
  const auto& xv = x.value();
  T total = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) total += xv[i];
  return x.graph().add_node(make_node<T>(OpKind::Sum, {x.id()}, Tensor<T>(Shape{1}, std::vector<T>{total})));
}

template <class T>
Expr<T> custom(std::vector<Expr<T>> inputs, Tensor<T> value, CustomBackward<T> backward) {
  if (inputs.empty()) throw ContractError("custom op needs at least one input");
  std::vector<std::size_t> ids;
  for (const auto& e : inputs) ids.push_back(e.id());
  auto n = make_node<T>(OpKind::Custom, std::move(ids), std::move(value));
  n.custom = std::move(backward);
  return inputs[0].graph().add_node(std::move(n));
}

#define TSNMT_INSTANTIATE(T)                                                              \
  template class Graph<T>;                                                                \
  template Expr<T> matmul(Expr<T>, Expr<T>);                                              \
  template Expr<T> add(Expr<T>, Expr<T>);                                                 \
  template Expr<T> sub(Expr<T>, Expr<T>);                                                 \
  template Expr<T> cmul(Expr<T>, Expr<T>);                                                \
  template Expr<T> mul_columns(Expr<T>, Expr<T>);                                         \
  template Expr<T> tanh(Expr<T>);                                                         \
  template Expr<T> sigmoid(Expr<T>);                                                      \
  template Expr<T> softmax(Expr<T>, std::vector<std::uint8_t>);                           \
  template Expr<T> cross_entropy(Expr<T>, std::vector<int>, std::vector<std::uint8_t>);   \
  template Expr<T> lookup(Expr<T>, std::vector<int>);                                     \
  template Expr<T> concat_rows(std::span<const Expr<T>>);                                 \
  template Expr<T> pick_row(Expr<T>, std::size_t);                                        \
  template Expr<T> select_columns(std::vector<std::uint8_t>, Expr<T>, Expr<T>);           \
  template Expr<T> sum(Expr<T>);                                                          \
  template Expr<T> custom(std::vector<Expr<T>>, Tensor<T>, CustomBackward<T>);

TSNMT_INSTANTIATE(float)
TSNMT_INSTANTIATE(double)

#undef TSNMT_INSTANTIATE

}  // namespace tsnmt::ad
