#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "umaml/tensor.hpp"

namespace umaml {

enum class Op : std::uint8_t {
  kInput,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kMatmul,
  kTranspose,
  kRelu,
  kStep,
  kTanh,
  kExp,
  kLog,
  kReciprocal,
  kSum,
  kMean,
  kBroadcast,
  kAddRowvec,
  kSumRows,
  kBroadcastRows,
  kRowSum,
  kBroadcastCols,
  kSoftmax,
  kMse,
  kCrossEntropy,
};

std::string_view op_name(Op op);

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const;
};

// Append-only reverse-mode differentiation graph.
//
// Nodes are evaluated eagerly when all their inputs are bound and lazily
// otherwise. backward() expresses every vector-Jacobian product with ordinary
// graph nodes, so the gradients it returns can be differentiated again.
//
// Binary elementwise ops accept equal shapes or a {1}-shaped operand on either
// side. No other broadcasting is performed.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Var leaf(Tensor value);
  Var constant(Tensor value) { return leaf(std::move(value)); }
  Var placeholder(Shape shape);
  // Same value as v, no history.
  Var detach(Var v);

  // Binds a root and drops every cached non-root value.
  void bind(Var root, Tensor value);

  const Tensor& forward_eval(Var v);
  const Shape& shape(Var v) const { return nodes_.at(v.id).shape; }
  Op op(Var v) const { return nodes_.at(v.id).op; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient of a scalar node with respect to each node in `wrt`. Nodes that
  // do not influence `output` get a zero constant of their shape.
  std::vector<Var> backward(Var output, std::span<const Var> wrt);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var relu(Var a);
  // Indicator of a > 0; zero derivative everywhere.
  Var step(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var reciprocal(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var broadcast(Var scalar, Shape shape);
  // a [m x n] + b [n] added to every row.
  Var add_rowvec(Var a, Var b);
  // [m x n] -> [n], summing over rows.
  Var sum_rows(Var a);
  // [n] -> [m x n]
  Var broadcast_rows(Var a, std::size_t rows);
  // [m x n] -> [m x 1]
  Var row_sum(Var a);
  // [m x 1] -> [m x n]
  Var broadcast_cols(Var a, std::size_t cols);
  // Row-wise softmax; a rank-1 tensor is one row.
  Var softmax(Var a);
  // mean((pred - target)^2)
  Var mse(Var pred, Var target);
  // Mean over rows of -sum_c onehot[r,c] * log softmax(logits)[r,c].
  Var cross_entropy(Var logits, Var onehot);

 private:
  struct Node {
    Op op = Op::kInput;
    std::array<std::size_t, 2> inputs{};
    std::uint8_t arity = 0;
    double attr = 0.0;
    Shape shape;
    std::optional<Tensor> value;
  };

  Var make(Op op, std::initializer_list<Var> inputs, Shape shape,
           double attr = 0.0);
  Tensor compute(const Node& node) const;
  void check_owned(Var v) const;
  // Appends the contributions of node `id` to the gradients of its inputs.
  void accumulate_vjp(std::size_t id, Var grad,
                      std::vector<std::optional<Var>>& grads,
                      const std::vector<bool>& relevant);

  std::vector<Node> nodes_;
};

inline Var operator+(Var a, Var b) { return a.graph->add(a, b); }
inline Var operator-(Var a, Var b) { return a.graph->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.graph->mul(a, b); }
inline Var operator*(double c, Var a) { return a.graph->scale(a, c); }
inline Var operator*(Var a, double c) { return a.graph->scale(a, c); }
inline Var operator-(Var a) { return a.graph->scale(a, -1.0); }

}  // namespace umaml
