#include "umaml/harness/random_graph.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "umaml/rng.hpp"

namespace umaml::verify {

ParamVector random_graph_inputs(std::uint64_t seed) {
  CounterRng rng(seed, 101);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  auto fill = [&](Shape shape) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) {
      v = dist(rng);
      if (std::abs(v) < 1e-3) v = std::copysign(1e-3, v);
    }
    return t;
  };
  return ParamVector({{"A", fill({2, 3})}, {"B", fill({2, 3})}, {"M", fill({3, 2})},
                      {"v", fill({3})}});
}

namespace {

class Builder {
 public:
  Builder(Graph& g, std::span<const Var> leaves, std::uint64_t seed, RandomExpr& out)
      : g_(g), leaves_(leaves), rng_(seed, 202), out_(out) {}

  // Expression of shape [2 x 3].
  Var expr(int depth) {
    if (depth <= 0) return pick(2) == 0 ? leaves_[0] : leaves_[1];
    switch (pick(12)) {
      case 0:
      case 1:
      case 2: {
        // Operands are built in sequence so the structure is reproducible.
        const std::size_t kind = last_;
        const Var lhs = expr(depth - 1);
        const Var rhs = expr(depth - 1);
        if (kind == 0) return g_.add(lhs, rhs);
        if (kind == 1) return g_.sub(lhs, rhs);
        return g_.mul(lhs, g_.tanh(rhs));
      }
      case 3: {
        const double c = coef();
        return g_.scale(expr(depth - 1), c);
      }
      case 4: {
        const Var in = expr(depth - 1);
        out_.relu_inputs.push_back(in);
        return g_.relu(in);
      }
      case 5: return g_.tanh(expr(depth - 1));
      case 6: return g_.exp(g_.tanh(expr(depth - 1)));
      case 7: {
        const Var e = expr(depth - 1);
        return g_.log(g_.add_scalar(g_.mul(e, e), 0.5));
      }
      case 8: {
        const Var lhs = g_.tanh(expr(depth - 1));
        const Var rhs = g_.tanh(expr(depth - 1));
        return g_.matmul(g_.matmul(lhs, leaves_[2]), rhs);
      }
      case 9: return g_.softmax(expr(depth - 1));
      case 10: return g_.add_rowvec(expr(depth - 1), leaves_[3]);
      default: return g_.reciprocal(g_.add_scalar(g_.exp(g_.tanh(expr(depth - 1))), 1.0));
    }
  }

  Var scalar(int depth) {
    const Var e = expr(depth - 1);
    switch (pick(4)) {
      case 0: return g_.sum(e);
      case 1: return g_.mean(e);
      case 2: return g_.mse(e, leaves_[1]);
      default: {
        Tensor onehot({2, 3});
        onehot.at(0, pick(3)) = 1.0;
        onehot.at(1, pick(3)) = 1.0;
        return g_.cross_entropy(e, g_.constant(onehot));
      }
    }
  }

 private:
  std::size_t pick(std::size_t n) {
    last_ = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
    return last_;
  }
  double coef() { return std::uniform_real_distribution<double>(-1.5, 1.5)(rng_); }

  Graph& g_;
  std::span<const Var> leaves_;
  CounterRng rng_;
  RandomExpr& out_;
  std::size_t last_ = 0;
};

}  // namespace

RandomExpr build_random_expr(Graph& graph, std::span<const Var> leaves,
                             std::uint64_t structure_seed, int max_depth) {
  RandomExpr r;
  Builder b(graph, leaves, structure_seed, r);
  r.output = b.scalar(max_depth);
  return r;
}

double relu_margin(const RandomExpr& expr) {
  double m = std::numeric_limits<double>::infinity();
  for (Var v : expr.relu_inputs) {
    for (double x : v.value().values()) m = std::min(m, std::abs(x));
  }
  return m;
}

}  // namespace umaml::verify
