#include <gtest/gtest.h>

#include <cmath>
#include <bit>
#include <functional>
#include <set>

#include "umaml/autodiff.hpp"
#include "umaml/finite_diff.hpp"
#include "umaml/harness/gradcheck.hpp"
#include "umaml/harness/random_graph.hpp"
#include "umaml/mlp.hpp"

using namespace umaml;

namespace {

Tensor vec(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

double grad1(Graph& g, Var out, Var x) { return g.backward(out, std::span(&x, 1))[0].value().item(); }

}  // namespace

TEST(Tensor, ShapeAndSize) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(vec({1, 2, 3}).rows(), 1u);
  EXPECT_DOUBLE_EQ(t.at(1, 2), 1.5);
}

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(Tensor({0}), std::invalid_argument);
  EXPECT_THROW(Tensor({1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(Tensor({2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(Forward, AddExample) {
  Graph g;
  const Var x = g.leaf(vec({1, 2}));
  const Var y = g.leaf(vec({3, 4}));
  EXPECT_EQ(g.forward_eval(g.add(x, y)), vec({4, 6}));
}

TEST(Forward, IdentityMatmul) {
  Graph g;
  const Var eye = g.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  const Var v = g.leaf(Tensor::matrix(2, 1, {5, 7}));
  EXPECT_EQ(g.forward_eval(g.matmul(eye, v)), Tensor::matrix(2, 1, {5, 7}));
}

TEST(Forward, SoftmaxExample) {
  Graph g;
  const Tensor s = g.forward_eval(g.softmax(g.leaf(vec({0.0, std::log(3.0)}))));
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(Forward, UnboundRootThrows) {
  Graph g;
  const Var p = g.placeholder({2});
  const Var y = g.scale(p, 2.0);
  EXPECT_THROW(g.forward_eval(y), std::logic_error);
  g.bind(p, vec({1, 2}));
  EXPECT_EQ(g.forward_eval(y), vec({2, 4}));
  g.bind(p, vec({3, 4}));
  EXPECT_EQ(g.forward_eval(y), vec({6, 8}));
}

TEST(Forward, ShapeMismatchThrows) {
  Graph g;
  const Var a = g.leaf(vec({1, 2}));
  const Var b = g.leaf(vec({1, 2, 3}));
  EXPECT_THROW(g.add(a, b), std::invalid_argument);
  EXPECT_THROW(g.matmul(g.leaf(Tensor({2, 3})), g.leaf(Tensor({2, 3}))), std::invalid_argument);
  EXPECT_THROW(g.mse(a, b), std::invalid_argument);
}

TEST(Forward, ScalarBroadcastOnly) {
  Graph g;
  const Var s = g.leaf(Tensor::scalar(2.0));
  const Var v = g.leaf(vec({1, 2, 3}));
  EXPECT_EQ(g.forward_eval(g.mul(s, v)), vec({2, 4, 6}));
  EXPECT_EQ(g.forward_eval(g.add(v, s)), vec({3, 4, 5}));
}

TEST(Forward, NonFiniteIsRejected) {
  Graph g;
  EXPECT_THROW(g.log(g.leaf(vec({0.0}))), std::domain_error);
  EXPECT_THROW(g.exp(g.leaf(vec({1000.0}))), std::domain_error);
}

TEST(Forward, RepeatedEvaluationIsBitIdentical) {
  const ParamVector in = verify::random_graph_inputs(9);
  Graph g1, g2;
  const auto l1 = add_leaves(g1, in);
  const auto l2 = add_leaves(g2, in);
  const double a = verify::build_random_expr(g1, l1, 9).output.value().item();
  const double b = verify::build_random_expr(g2, l2, 9).output.value().item();
  EXPECT_EQ(std::bit_cast<std::uint64_t>(a), std::bit_cast<std::uint64_t>(b));
}

TEST(Backward, SquareAtThree) {
  Graph g;
  const Var x = g.leaf(Tensor::scalar(3.0));
  EXPECT_DOUBLE_EQ(grad1(g, g.mul(x, x), x), 6.0);
}

TEST(Backward, ConstantHasZeroGradient) {
  Graph g;
  const Var x = g.leaf(Tensor::scalar(3.0));
  const Var c = g.constant(Tensor::scalar(5.0));
  EXPECT_EQ(grad1(g, g.scale(c, 2.0), x), 0.0);
}

TEST(Backward, UnreachableGetsZeroOfItsShape) {
  Graph g;
  const Var x = g.leaf(Tensor::scalar(1.0));
  const Var w = g.leaf(Tensor({2, 3}, 4.0));
  const Var wrt[] = {x, w};
  const auto grads = g.backward(g.mul(x, x), wrt);
  EXPECT_EQ(grads[1].value(), Tensor({2, 3}, 0.0));
}

TEST(Backward, NonScalarOutputThrows) {
  Graph g;
  const Var x = g.leaf(vec({1, 2}));
  EXPECT_THROW(g.backward(x, std::span(&x, 1)), std::invalid_argument);
}

TEST(Backward, SecondDerivativeOfCubeAtTwo) {
  Graph g;
  const Var x = g.leaf(Tensor::scalar(2.0));
  const Var cube = g.mul(g.mul(x, x), x);
  const Var d1 = g.backward(cube, std::span(&x, 1))[0];
  EXPECT_NEAR(d1.value().item(), 12.0, 1e-12);
  const Var d2 = g.backward(d1, std::span(&x, 1))[0];
  EXPECT_NEAR(d2.value().item(), 12.0, 1e-8);
}

TEST(Backward, ThirdDerivativeOfCube) {
  Graph g;
  const Var x = g.leaf(Tensor::scalar(-1.3));
  Var d = g.mul(g.mul(x, x), x);
  for (int k = 0; k < 3; ++k) d = g.backward(d, std::span(&x, 1))[0];
  EXPECT_NEAR(d.value().item(), 6.0, 1e-12);
}

TEST(Backward, EveryOpMatchesFiniteDifferences) {
  // One small expression per op, each reduced by sum.
  using Build = std::function<Var(Graph&, Var)>;
  const std::vector<std::pair<const char*, Build>> cases = {
      {"add", [](Graph& g, Var a) { return g.add(a, g.tanh(a)); }},
      {"sub", [](Graph& g, Var a) { return g.sub(g.tanh(a), a); }},
      {"mul", [](Graph& g, Var a) { return g.mul(a, a); }},
      {"scale", [](Graph& g, Var a) { return g.scale(a, -2.5); }},
      {"matmul", [](Graph& g, Var a) { return g.matmul(a, g.transpose(a)); }},
      {"relu", [](Graph& g, Var a) { return g.mul(g.relu(a), a); }},
      {"tanh", [](Graph& g, Var a) { return g.tanh(a); }},
      {"exp", [](Graph& g, Var a) { return g.exp(a); }},
      {"log", [](Graph& g, Var a) { return g.log(g.add_scalar(g.mul(a, a), 1.0)); }},
      {"mean", [](Graph& g, Var a) { return g.mul(a, g.broadcast(g.mean(a), {2, 3})); }},
      {"softmax", [](Graph& g, Var a) { return g.mul(g.softmax(a), a); }},
      {"mse", [](Graph& g, Var a) { return g.mse(a, g.constant(Tensor({2, 3}, 0.5))); }},
      {"cross_entropy", [](Graph& g, Var a) {
         return g.cross_entropy(a, g.constant(Tensor::matrix(2, 3, {0, 1, 0, 1, 0, 0})));
       }},
  };
  const ParamVector theta({{"a", Tensor::matrix(2, 3, {0.3, -1.2, 0.8, 1.7, -0.4, 0.25})}});
  for (const auto& [name, build] : cases) {
    auto f = [&](Graph& g, Var a) {
      const Var e = build(g, a);
      return g.shape(e).size() == 1 && g.shape(e)[0] == 1 ? e : g.sum(e);
    };
    Graph g;
    const auto leaves = add_leaves(g, theta);
    const ParamVector analytic = collect(theta, g.backward(f(g, leaves[0]), leaves));
    const ParamVector numeric = finite_diff_grad(
        [&](const ParamVector& p) {
          Graph h;
          return f(h, add_leaves(h, p)[0]).value().item();
        },
        theta, 1e-5);
    EXPECT_LE(max_relative_error(analytic, numeric, verify::kRelFloor), 1e-7) << name;
  }
}

TEST(Backward, GradientsAreGraphNodes) {
  Graph g;
  const Var x = g.leaf(Tensor::scalar(0.7));
  const Var y = g.tanh(g.mul(x, x));
  const Var d = g.backward(y, std::span(&x, 1))[0];
  EXPECT_NE(g.op(d), Op::kInput);
  // d/dx [2x (1 - tanh^2(x^2))]
  const double t = std::tanh(0.49);
  const double expected = 2.0 * (1 - t * t) + 2 * 0.7 * (-2 * t * (1 - t * t) * 2 * 0.7);
  EXPECT_NEAR(g.backward(d, std::span(&x, 1))[0].value().item(), expected, 1e-12);
}

TEST(FiniteDiff, SquareExample) {
  const ParamVector theta({{"t", Tensor::scalar(3.0)}});
  const ParamVector g = finite_diff_grad(
      [](const ParamVector& p) { return p[0].value.item() * p[0].value.item(); }, theta, 1e-5);
  EXPECT_NEAR(g[0].value.item(), 6.0, 1e-8);
}

TEST(FiniteDiff, ConstantGivesZeros) {
  const ParamVector theta({{"a", Tensor({2, 2}, 1.0)}, {"b", Tensor({3}, -1.0)}});
  const ParamVector g = finite_diff_grad([](const ParamVector&) { return 4.2; }, theta, 1e-5);
  for (std::size_t i = 0; i < g.numel(); ++i) EXPECT_EQ(g.coord(i), 0.0);
}

TEST(FiniteDiff, SineAtZero) {
  const ParamVector theta({{"t", Tensor::scalar(0.0)}});
  const ParamVector g = finite_diff_grad(
      [](const ParamVector& p) { return std::sin(p[0].value.item()); }, theta, 1e-5);
  EXPECT_NEAR(g[0].value.item(), 1.0, 1e-8);
}

TEST(FiniteDiff, Errors) {
  const ParamVector theta({{"t", Tensor::scalar(0.0)}});
  auto f = [](const ParamVector& p) { return p[0].value.item(); };
  EXPECT_THROW(finite_diff_grad(f, theta, 0.0), std::invalid_argument);
  EXPECT_THROW(finite_diff_grad([](const ParamVector&) { return std::nan(""); }, theta, 1e-5),
               std::domain_error);
}

TEST(Properties, RandomGraphsMatchFiniteDifferences) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    EXPECT_LE(verify::check_random_graphs(seed, 40), 1e-5) << "seed " << seed;
  }
}

TEST(Properties, PolynomialSecondDerivatives) {
  for (std::uint64_t seed : {0u, 5u, 11u}) {
    EXPECT_LE(verify::check_polynomial_second_derivatives(seed, 100), 1e-8);
  }
}

TEST(Properties, BackwardIsLinear) {
  for (std::uint64_t seed : {0u, 3u}) EXPECT_LE(verify::check_backward_linearity(seed), 1e-12);
}

TEST(Properties, RandomExpressionsCoverEveryRequiredOp) {
  std::set<Op> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const ParamVector in = verify::random_graph_inputs(seed);
    Graph g;
    const auto leaves = add_leaves(g, in);
    verify::build_random_expr(g, leaves, seed);
    for (std::size_t i = 0; i < g.size(); ++i) seen.insert(g.op(Var{&g, i}));
  }
  for (Op op : {Op::kAdd, Op::kSub, Op::kMul, Op::kScale, Op::kMatmul, Op::kRelu, Op::kTanh,
                Op::kExp, Op::kLog, Op::kSum, Op::kMean, Op::kSoftmax, Op::kMse,
                Op::kCrossEntropy}) {
    EXPECT_TRUE(seen.contains(op)) << op_name(op);
  }
}
