#include "umaml/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace umaml {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kMatmul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kRelu: return "relu";
    case Op::kStep: return "step";
    case Op::kTanh: return "tanh";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kReciprocal: return "reciprocal";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kBroadcast: return "broadcast";
    case Op::kAddRowvec: return "add_rowvec";
    case Op::kSumRows: return "sum_rows";
    case Op::kBroadcastRows: return "broadcast_rows";
    case Op::kRowSum: return "row_sum";
    case Op::kBroadcastCols: return "broadcast_cols";
    case Op::kSoftmax: return "softmax";
    case Op::kMse: return "mse";
    case Op::kCrossEntropy: return "cross_entropy";
  }
  return "?";
}

const Tensor& Var::value() const { return graph->forward_eval(*this); }
const Shape& Var::shape() const { return graph->shape(*this); }

namespace {

const Shape kScalarShape{1};

bool is_scalar(const Shape& s) { return s.size() == 1 && s[0] == 1; }

[[noreturn]] void shape_error(Op op, const Shape& a, const Shape& b) {
  throw std::invalid_argument("shape mismatch in " + std::string(op_name(op)) +
                              ": " + shape_str(a) + " vs " + shape_str(b));
}

Shape elementwise_shape(Op op, const Shape& a, const Shape& b) {
  if (a == b) return a;
  if (is_scalar(a)) return b;
  if (is_scalar(b)) return a;
  shape_error(op, a, b);
}

std::size_t rows_of(const Shape& s) { return s.size() == 1 ? 1 : s[0]; }
std::size_t cols_of(const Shape& s) { return s.back(); }

template <typename F>
Tensor binary(const Tensor& a, const Tensor& b, const Shape& out, F f) {
  Tensor r(out);
  auto rv = r.values();
  auto av = a.values();
  auto bv = b.values();
  const bool a1 = av.size() == 1 && rv.size() != 1;
  const bool b1 = bv.size() == 1 && rv.size() != 1;
  for (std::size_t i = 0; i < rv.size(); ++i) {
    rv[i] = f(av[a1 ? 0 : i], bv[b1 ? 0 : i]);
  }
  return r;
}

template <typename F>
Tensor unary(const Tensor& a, F f) {
  Tensor r(a.shape());
  auto rv = r.values();
  auto av = a.values();
  for (std::size_t i = 0; i < rv.size(); ++i) rv[i] = f(av[i]);
  return r;
}

Tensor matmul_values(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor r({m, n});
  auto rv = r.values();
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = rv.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  return r;
}

Tensor softmax_values(const Tensor& a) {
  Tensor r(a.shape());
  const std::size_t m = a.rows(), n = a.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* in = a.values().data() + i * n;
    double* out = r.values().data() + i * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = std::exp(in[j] - mx);
      z += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= z;
  }
  return r;
}

}  // namespace

void Graph::check_owned(Var v) const {
  if (v.graph != this || v.id >= nodes_.size()) {
    throw std::invalid_argument("variable does not belong to this graph");
  }
}

Var Graph::leaf(Tensor value) {
  Node n;
  n.op = Op::kInput;
  n.shape = value.shape();
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::placeholder(Shape shape) {
  Tensor probe(shape);  // validates the shape
  Node n;
  n.op = Op::kInput;
  n.shape = std::move(shape);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::detach(Var v) { return leaf(forward_eval(v)); }

void Graph::bind(Var root, Tensor value) {
  check_owned(root);
  Node& n = nodes_[root.id];
  if (n.op != Op::kInput) {
    throw std::invalid_argument("only root nodes can be bound");
  }
  if (value.shape() != n.shape) shape_error(Op::kInput, n.shape, value.shape());
  n.value = std::move(value);
  for (Node& other : nodes_) {
    if (other.op != Op::kInput) other.value.reset();
  }
}

Var Graph::make(Op op, std::initializer_list<Var> inputs, Shape shape,
                double attr) {
  Node n;
  n.op = op;
  n.attr = attr;
  n.shape = std::move(shape);
  bool ready = true;
  for (Var v : inputs) {
    check_owned(v);
    n.inputs[n.arity++] = v.id;
    ready = ready && nodes_[v.id].value.has_value();
  }
  if (ready) n.value = compute(n);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Graph::forward_eval(Var v) {
  check_owned(v);
  if (nodes_[v.id].value) return *nodes_[v.id].value;
  std::vector<bool> needed(v.id + 1, false);
  needed[v.id] = true;
  for (std::size_t i = v.id + 1; i-- > 0;) {
    if (!needed[i] || nodes_[i].value) continue;
    if (nodes_[i].op == Op::kInput) {
      throw std::logic_error("unbound root node " + std::to_string(i));
    }
    for (std::uint8_t k = 0; k < nodes_[i].arity; ++k) {
      needed[nodes_[i].inputs[k]] = true;
    }
  }
  for (std::size_t i = 0; i <= v.id; ++i) {
    if (needed[i] && !nodes_[i].value) nodes_[i].value = compute(nodes_[i]);
  }
  return *nodes_[v.id].value;
}

Tensor Graph::compute(const Node& node) const {
  const auto in = [&](int k) -> const Tensor& {
    return *nodes_[node.inputs[k]].value;
  };
  const double c = node.attr;
  Tensor r;
  switch (node.op) {
    case Op::kInput:
      throw std::logic_error("compute() on a root node");
    case Op::kAdd:
      r = binary(in(0), in(1), node.shape, [](double x, double y) { return x + y; });
      break;
    case Op::kSub:
      r = binary(in(0), in(1), node.shape, [](double x, double y) { return x - y; });
      break;
    case Op::kMul:
      r = binary(in(0), in(1), node.shape, [](double x, double y) { return x * y; });
      break;
    case Op::kScale:
      r = unary(in(0), [c](double x) { return c * x; });
      break;
    case Op::kAddScalar:
      r = unary(in(0), [c](double x) { return x + c; });
      break;
    case Op::kMatmul:
      r = matmul_values(in(0), in(1));
      break;
    case Op::kTranspose: {
      const Tensor& a = in(0);
      const std::size_t m = a.shape()[0], n = a.shape()[1];
      r = Tensor({n, m});
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) r.at(j, i) = a.at(i, j);
      break;
    }
    case Op::kRelu:
      r = unary(in(0), [](double x) { return x > 0.0 ? x : 0.0; });
      break;
    case Op::kStep:
      r = unary(in(0), [](double x) { return x > 0.0 ? 1.0 : 0.0; });
      break;
    case Op::kTanh:
      r = unary(in(0), [](double x) { return std::tanh(x); });
      break;
    case Op::kExp:
      r = unary(in(0), [](double x) { return std::exp(x); });
      break;
    case Op::kLog:
      r = unary(in(0), [](double x) { return std::log(x); });
      break;
    case Op::kReciprocal:
      r = unary(in(0), [](double x) { return 1.0 / x; });
      break;
    case Op::kSum:
    case Op::kMean: {
      double s = 0.0;
      for (double x : in(0).values()) s += x;
      if (node.op == Op::kMean) s /= static_cast<double>(in(0).size());
      r = Tensor::scalar(s);
      break;
    }
    case Op::kBroadcast:
      r = Tensor(node.shape, in(0).item());
      break;
    case Op::kAddRowvec: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      r = a;
      const std::size_t m = a.rows(), n = a.cols();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) r.at(i, j) += b[j];
      break;
    }
    case Op::kSumRows: {
      const Tensor& a = in(0);
      r = Tensor(node.shape);
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r[j] += a.at(i, j);
      break;
    }
    case Op::kBroadcastRows: {
      const Tensor& a = in(0);
      r = Tensor(node.shape);
      for (std::size_t i = 0; i < node.shape[0]; ++i)
        for (std::size_t j = 0; j < a.size(); ++j) r.at(i, j) = a[j];
      break;
    }
    case Op::kRowSum: {
      const Tensor& a = in(0);
      r = Tensor(node.shape);
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r[i] += a.at(i, j);
      break;
    }
    case Op::kBroadcastCols: {
      const Tensor& a = in(0);
      r = Tensor(node.shape);
      const std::size_t n = cols_of(node.shape);
      for (std::size_t i = 0; i < rows_of(node.shape); ++i)
        for (std::size_t j = 0; j < n; ++j) r.at(i, j) = a[i];
      break;
    }
    case Op::kSoftmax:
      r = softmax_values(in(0));
      break;
    case Op::kMse: {
      const Tensor& p = in(0);
      const Tensor& t = in(1);
      double s = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - t[i];
        s += d * d;
      }
      r = Tensor::scalar(s / static_cast<double>(p.size()));
      break;
    }
    case Op::kCrossEntropy: {
      const Tensor& z = in(0);
      const Tensor& y = in(1);
      const std::size_t m = z.rows(), n = z.cols();
      double total = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double* row = z.values().data() + i * n;
        const double mx = *std::max_element(row, row + n);
        double se = 0.0;
        for (std::size_t j = 0; j < n; ++j) se += std::exp(row[j] - mx);
        const double lse = mx + std::log(se);
        for (std::size_t j = 0; j < n; ++j) total += y.at(i, j) * (lse - row[j]);
      }
      r = Tensor::scalar(total / static_cast<double>(m));
      break;
    }
  }
  if (!r.all_finite()) {
    throw std::domain_error("non-finite value produced by " +
                            std::string(op_name(node.op)));
  }
  return r;
}

Var Graph::add(Var a, Var b) {
  return make(Op::kAdd, {a, b}, elementwise_shape(Op::kAdd, shape(a), shape(b)));
}
Var Graph::sub(Var a, Var b) {
  return make(Op::kSub, {a, b}, elementwise_shape(Op::kSub, shape(a), shape(b)));
}
Var Graph::mul(Var a, Var b) {
  return make(Op::kMul, {a, b}, elementwise_shape(Op::kMul, shape(a), shape(b)));
}
Var Graph::scale(Var a, double c) { return make(Op::kScale, {a}, shape(a), c); }
Var Graph::add_scalar(Var a, double c) {
  return make(Op::kAddScalar, {a}, shape(a), c);
}

Var Graph::matmul(Var a, Var b) {
  const Shape& sa = shape(a);
  const Shape& sb = shape(b);
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    shape_error(Op::kMatmul, sa, sb);
  }
  return make(Op::kMatmul, {a, b}, {sa[0], sb[1]});
}

Var Graph::transpose(Var a) {
  const Shape& s = shape(a);
  if (s.size() != 2) shape_error(Op::kTranspose, s, s);
  return make(Op::kTranspose, {a}, {s[1], s[0]});
}

Var Graph::relu(Var a) { return make(Op::kRelu, {a}, shape(a)); }
Var Graph::step(Var a) { return make(Op::kStep, {a}, shape(a)); }
Var Graph::tanh(Var a) { return make(Op::kTanh, {a}, shape(a)); }
Var Graph::exp(Var a) { return make(Op::kExp, {a}, shape(a)); }
Var Graph::log(Var a) { return make(Op::kLog, {a}, shape(a)); }
Var Graph::reciprocal(Var a) { return make(Op::kReciprocal, {a}, shape(a)); }
Var Graph::sum(Var a) { return make(Op::kSum, {a}, kScalarShape); }
Var Graph::mean(Var a) { return make(Op::kMean, {a}, kScalarShape); }

Var Graph::broadcast(Var scalar, Shape s) {
  if (!is_scalar(shape(scalar))) shape_error(Op::kBroadcast, shape(scalar), s);
  Tensor probe(s);
  return make(Op::kBroadcast, {scalar}, std::move(s));
}

Var Graph::add_rowvec(Var a, Var b) {
  const Shape& sa = shape(a);
  const Shape& sb = shape(b);
  if (sa.size() != 2 || sb.size() != 1 || sb[0] != sa[1]) {
    shape_error(Op::kAddRowvec, sa, sb);
  }
  return make(Op::kAddRowvec, {a, b}, sa);
}

Var Graph::sum_rows(Var a) {
  const Shape& s = shape(a);
  if (s.size() != 2) shape_error(Op::kSumRows, s, s);
  return make(Op::kSumRows, {a}, {s[1]});
}

Var Graph::broadcast_rows(Var a, std::size_t rows) {
  const Shape& s = shape(a);
  if (s.size() != 1 || rows == 0) shape_error(Op::kBroadcastRows, s, {rows});
  return make(Op::kBroadcastRows, {a}, {rows, s[0]});
}

Var Graph::row_sum(Var a) {
  const Shape& s = shape(a);
  if (s.size() != 2) shape_error(Op::kRowSum, s, s);
  return make(Op::kRowSum, {a}, {s[0], 1});
}

Var Graph::broadcast_cols(Var a, std::size_t cols) {
  const Shape& s = shape(a);
  if (s.size() != 2 || s[1] != 1 || cols == 0) {
    shape_error(Op::kBroadcastCols, s, {cols});
  }
  return make(Op::kBroadcastCols, {a}, {s[0], cols});
}

Var Graph::softmax(Var a) { return make(Op::kSoftmax, {a}, shape(a)); }

Var Graph::mse(Var pred, Var target) {
  if (shape(pred) != shape(target)) shape_error(Op::kMse, shape(pred), shape(target));
  return make(Op::kMse, {pred, target}, kScalarShape);
}

Var Graph::cross_entropy(Var logits, Var onehot) {
  if (shape(logits) != shape(onehot)) {
    shape_error(Op::kCrossEntropy, shape(logits), shape(onehot));
  }
  return make(Op::kCrossEntropy, {logits, onehot}, kScalarShape);
}

std::vector<Var> Graph::backward(Var output, std::span<const Var> wrt) {
  check_owned(output);
  if (forward_eval(output).size() != 1) {
    throw std::invalid_argument("backward requires a scalar output, got shape " +
                                shape_str(shape(output)));
  }
  const std::size_t out = output.id;

  // relevant[i]: node i lies on a path from some wrt node.
  std::vector<bool> relevant(out + 1, false);
  for (Var w : wrt) {
    check_owned(w);
    if (w.id <= out) relevant[w.id] = true;
  }
  for (std::size_t i = 0; i <= out; ++i) {
    if (relevant[i]) continue;
    const Node& n = nodes_[i];
    for (std::uint8_t k = 0; k < n.arity; ++k) {
      if (relevant[n.inputs[k]]) {
        relevant[i] = true;
        break;
      }
    }
  }

  std::vector<std::optional<Var>> grads(out + 1);
  if (relevant[out]) grads[out] = constant(Tensor::scalar(1.0));
  for (std::size_t i = out + 1; i-- > 0;) {
    if (!grads[i] || nodes_[i].op == Op::kInput) continue;
    accumulate_vjp(i, *grads[i], grads, relevant);
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (Var w : wrt) {
    if (w.id <= out && grads[w.id]) {
      result.push_back(*grads[w.id]);
    } else {
      result.push_back(constant(Tensor(shape(w))));
    }
  }
  return result;
}

void Graph::accumulate_vjp(std::size_t id, Var g,
                           std::vector<std::optional<Var>>& grads,
                           const std::vector<bool>& relevant) {
  // Copy what we need: creating nodes may reallocate nodes_.
  const Op op = nodes_[id].op;
  const double c = nodes_[id].attr;
  const Shape out_shape = nodes_[id].shape;
  const Var self{this, id};
  const Var a{this, nodes_[id].inputs[0]};
  const Var b{this, nodes_[id].inputs[1]};
  const bool need_a = relevant[a.id];
  const bool need_b = nodes_[id].arity > 1 && relevant[b.id];

  auto push = [&](Var input, Var contribution) {
    // Undo scalar broadcasting of elementwise ops.
    if (is_scalar(shape(input)) && !is_scalar(shape(contribution))) {
      contribution = sum(contribution);
    }
    auto& slot = grads[input.id];
    slot = slot ? add(*slot, contribution) : contribution;
  };

  switch (op) {
    case Op::kInput:
    case Op::kStep:
      break;
    case Op::kAdd:
      if (need_a) push(a, g);
      if (need_b) push(b, g);
      break;
    case Op::kSub:
      if (need_a) push(a, g);
      if (need_b) push(b, scale(g, -1.0));
      break;
    case Op::kMul:
      if (need_a) push(a, mul(g, b));
      if (need_b) push(b, mul(g, a));
      break;
    case Op::kScale:
      if (need_a) push(a, scale(g, c));
      break;
    case Op::kAddScalar:
      if (need_a) push(a, g);
      break;
    case Op::kMatmul:
      if (need_a) push(a, matmul(g, transpose(b)));
      if (need_b) push(b, matmul(transpose(a), g));
      break;
    case Op::kTranspose:
      if (need_a) push(a, transpose(g));
      break;
    case Op::kRelu:
      if (need_a) push(a, mul(g, step(a)));
      break;
    case Op::kTanh:
      if (need_a) push(a, mul(g, add_scalar(scale(mul(self, self), -1.0), 1.0)));
      break;
    case Op::kExp:
      if (need_a) push(a, mul(g, self));
      break;
    case Op::kLog:
      if (need_a) push(a, mul(g, reciprocal(a)));
      break;
    case Op::kReciprocal:
      if (need_a) push(a, scale(mul(g, mul(self, self)), -1.0));
      break;
    case Op::kSum:
      if (need_a) push(a, broadcast(g, shape(a)));
      break;
    case Op::kMean:
      if (need_a) {
        const double n = static_cast<double>(shape_size(shape(a)));
        push(a, scale(broadcast(g, shape(a)), 1.0 / n));
      }
      break;
    case Op::kBroadcast:
      if (need_a) push(a, sum(g));
      break;
    case Op::kAddRowvec:
      if (need_a) push(a, g);
      if (need_b) push(b, sum_rows(g));
      break;
    case Op::kSumRows:
      if (need_a) push(a, broadcast_rows(g, shape(a)[0]));
      break;
    case Op::kBroadcastRows:
      if (need_a) push(a, sum_rows(g));
      break;
    case Op::kRowSum:
      if (need_a) push(a, broadcast_cols(g, shape(a)[1]));
      break;
    case Op::kBroadcastCols:
      if (need_a) push(a, row_sum(g));
      break;
    case Op::kSoftmax:
      if (need_a) {
        const Var gy = mul(g, self);
        Var centered;
        if (out_shape.size() == 1) {
          centered = sub(g, sum(gy));
        } else {
          centered = sub(g, broadcast_cols(row_sum(gy), out_shape[1]));
        }
        push(a, mul(self, centered));
      }
      break;
    case Op::kMse: {
      const double n = static_cast<double>(shape_size(shape(a)));
      const Var gp = mul(g, scale(sub(a, b), 2.0 / n));
      if (need_a) push(a, gp);
      if (need_b) push(b, scale(gp, -1.0));
      break;
    }
    case Op::kCrossEntropy: {
      const double m = static_cast<double>(rows_of(shape(a)));
      const Var probs = softmax(a);
      if (need_a) push(a, mul(g, scale(sub(probs, b), 1.0 / m)));
      if (need_b) push(b, mul(g, scale(log(probs), -1.0 / m)));
      break;
    }
  }
}

}  // namespace umaml
