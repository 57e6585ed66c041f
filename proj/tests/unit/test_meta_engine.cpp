#include <gtest/gtest.h>

#include <cmath>

#include "umaml/finite_diff.hpp"
#include "umaml/harness/gradcheck.hpp"
#include "umaml/meta_engine.hpp"

using namespace umaml;

namespace {

Var square(std::span<const Var> p) { return p[0].graph->mul(p[0], p[0]); }

void expect_same_trace(const std::vector<MetricsRow>& a, const std::vector<MetricsRow>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].iteration, b[i].iteration);
    EXPECT_EQ(a[i].mean_support_loss, b[i].mean_support_loss);
    EXPECT_EQ(a[i].mean_query_loss, b[i].mean_query_loss);
    EXPECT_EQ(a[i].post_adapt_eval_loss, b[i].post_adapt_eval_loss);
    EXPECT_EQ(a[i].accuracy, b[i].accuracy);
    EXPECT_EQ(a[i].init_idx, b[i].init_idx);
    EXPECT_EQ(a[i].weights, b[i].weights);
    EXPECT_EQ(a[i].s, b[i].s);
  }
}

struct SmallRun {
  MlpSpec spec{{1, 20, 1}, Activation::kRelu};
  MetaConfig cfg;
  std::vector<Episode> eval;

  explicit SmallRun(std::size_t eval_tasks = 8) {
    cfg.iterations = 40;
    cfg.outer_lr = 1e-2;
    SinusoidSource src(10, 10, 9, Split::kEval);
    for (std::size_t i = 0; i < eval_tasks; ++i) eval.push_back(src.next());
  }

  TrainResult run(std::uint64_t seed = 0) const {
    SinusoidSource tasks(10, 10, seed, Split::kTrain);
    TrainOptions opt;
    opt.log_interval = 5;
    opt.eval_inner_steps = 3;
    return meta_train(spec, cfg, tasks, eval, seed, opt);
  }
};

}  // namespace

TEST(InnerAdapt, QuadraticExamples) {
  Graph g;
  const Var theta = g.leaf(Tensor::scalar(1.0));
  const std::vector<Var> p{theta};
  EXPECT_NEAR(inner_adapt(p, square, 0.1, 1, GradOrder::kSecond).params[0].value().item(), 0.8,
              1e-15);
  EXPECT_NEAR(inner_adapt(p, square, 0.1, 2, GradOrder::kSecond).params[0].value().item(), 0.64,
              1e-15);
  const AdaptResult r = inner_adapt(p, square, 0.1, 1, GradOrder::kFirst);
  EXPECT_EQ(r.initial_loss, 1.0);
}

TEST(InnerAdapt, ZeroGradientIsFixedPoint) {
  Graph g;
  const std::vector<Var> p{g.leaf(Tensor::scalar(0.0))};
  EXPECT_EQ(inner_adapt(p, square, 0.5, 5, GradOrder::kSecond).params[0].value().item(), 0.0);
}

TEST(InnerAdapt, SecondOrderGradientThroughSteps) {
  // theta' = theta (1 - 2 a)^k for L = theta^2, so d theta' / d theta = (1 - 2 a)^k.
  Graph g;
  const Var theta = g.leaf(Tensor::scalar(1.3));
  const std::vector<Var> p{theta};
  const AdaptResult r = inner_adapt(p, square, 0.1, 3, GradOrder::kSecond);
  EXPECT_NEAR(g.backward(r.params[0], p)[0].value().item(), std::pow(0.8, 3), 1e-14);
  Graph h;
  const std::vector<Var> q{h.leaf(Tensor::scalar(1.3))};
  const AdaptResult f = inner_adapt(q, square, 0.1, 3, GradOrder::kFirst);
  EXPECT_NEAR(h.backward(f.params[0], q)[0].value().item(), 1.0, 1e-14);
}

TEST(MetaGradient, MatchesFiniteDifferences) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    EXPECT_LE(verify::check_meta_gradient_fd(seed, GradOrder::kSecond), 1e-4);
  }
}

TEST(MetaGradient, OrdersAgreeOnLinearProbeAndDifferOnCurvedProbe) {
  EXPECT_LE(verify::check_linear_probe_orders(0), 1e-10);
  EXPECT_LE(verify::check_curved_probe(GradOrder::kSecond), 1e-10);
  EXPECT_GT(verify::check_curved_probe(GradOrder::kFirst), 0.1);
}

TEST(MetaGradient, FirstOrderDiffersFromFiniteDifferences) {
  EXPECT_GT(verify::check_meta_gradient_fd(0, GradOrder::kFirst), 1e-4);
}

TEST(MetaGradient, UniformAverageOfIdenticalEpisodes) {
  const MlpSpec spec{{1, 8, 1}, Activation::kTanh};
  const ParamVector theta = init_params(spec, 4);
  SinusoidSource src(5, 5, 1, Split::kTrain);
  const Episode ep = src.next();
  MetaConfig cfg;
  cfg.inner_lr = 0.05;
  cfg.meta_batch = 1;
  const MetaGradient one = meta_gradient(spec, theta, std::span(&ep, 1), cfg);
  const std::vector<Episode> four(4, ep);
  cfg.meta_batch = 4;
  const MetaGradient many = meta_gradient(spec, theta, four, cfg);
  EXPECT_LE(max_relative_error(one.grad, many.grad, 1e-12), 1e-12);
  EXPECT_NEAR(one.objective, many.objective, 1e-12);
  for (double w : many.weights) EXPECT_DOUBLE_EQ(w, 0.25);
}

TEST(MetaGradient, UncertaintySlotGradient) {
  // d/ds_i [exp(-s_i) L_i / 2 + s_i / 2] = (1 - exp(-s_i) L_i) / 2 for regression.
  const MlpSpec spec{{1, 8, 1}, Activation::kTanh};
  const ParamVector theta = init_params(spec, 4);
  SinusoidSource src(5, 5, 1, Split::kTrain);
  const std::vector<Episode> eps{src.next(), src.next()};
  MetaConfig cfg;
  cfg.meta_batch = 2;
  cfg.mode = CombineMode::kUncertainty;
  UncertaintyState u(2);
  u.s = {0.3, -0.4};
  const MetaGradient mg = meta_gradient(spec, theta, eps, cfg, &u);
  ASSERT_EQ(mg.s_grad.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const double expected = (1.0 - std::exp(-u.s[i]) * mg.outcomes[i].query_loss) / 2.0;
    EXPECT_NEAR(mg.s_grad[i], expected, 1e-12);
  }
}

TEST(MetaTrain, ZeroIterationsReturnsInitialParams) {
  SmallRun r;
  r.cfg.iterations = 0;
  const TrainResult out = r.run(3);
  EXPECT_EQ(out.params, init_params(r.spec, 3));
  EXPECT_TRUE(out.trace.empty());
}

TEST(MetaTrain, TraceIsDeterministic) {
  SmallRun r;
  const TrainResult a = r.run(), b = r.run();
  expect_same_trace(a.trace, b.trace);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.trace.back().iteration, 39u);
  EXPECT_EQ(a.trace.size(), 9u);
}

TEST(MetaTrain, ReducesEvaluationLossOnSinusoid) {
  SmallRun r(20);
  r.spec = {{1, 40, 40, 1}, Activation::kRelu};
  r.cfg.iterations = 300;
  const TrainResult out = r.run();
  EXPECT_LT(out.trace.back().post_adapt_eval_loss, 0.6 * out.trace.front().post_adapt_eval_loss);
}

TEST(MetaTrain, SingleSlotPoolMatchesPlainMaml) {
  SmallRun plain;
  SmallRun pooled;
  pooled.cfg.use_pool = true;
  pooled.cfg.pool_capacity = 1;
  const TrainResult a = plain.run(), b = pooled.run();
  expect_same_trace(a.trace, b.trace);
  EXPECT_EQ(a.params, b.params);
}

TEST(MetaTrain, PoolIndicesStayInRange) {
  SmallRun r;
  r.cfg.use_pool = true;
  r.cfg.pool_capacity = 3;
  const TrainResult out = r.run();
  EXPECT_EQ(out.pool.size(), 3u);
  for (const MetricsRow& row : out.trace) EXPECT_LT(row.init_idx, 3u);
}

TEST(MetaTrain, WeightGenRowsCarryNormalizedWeights) {
  SmallRun r;
  r.cfg.mode = CombineMode::kWeightGen;
  for (const MetricsRow& row : r.run().trace) {
    ASSERT_EQ(row.weights.size(), 4u);
    double total = 0.0;
    for (double w : row.weights) total += w;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_TRUE(row.s.empty());
  }
}

TEST(MetaTrain, UncertaintyStateEvolves) {
  SmallRun r;
  r.cfg.mode = CombineMode::kUncertainty;
  const TrainResult kept = r.run();
  ASSERT_EQ(kept.uncertainty.size(), 4u);
  double drift = 0.0;
  for (double s : kept.uncertainty.s) drift = std::max(drift, std::abs(s));
  EXPECT_GT(drift, 2 * r.cfg.outer_lr);

  // A fresh state each iteration moves at most one Adam step from zero.
  r.cfg.fresh_uncertainty = true;
  for (const MetricsRow& row : r.run().trace) {
    ASSERT_EQ(row.s.size(), 4u);
    for (double s : row.s) EXPECT_LE(std::abs(s), r.cfg.outer_lr * (1 + 1e-6));
  }
}

TEST(MetaTrain, ConfigValidation) {
  MetaConfig cfg;
  cfg.meta_batch = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.inner_lr = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(parse_mode("maml"), CombineMode::kUniform);
  EXPECT_EQ(parse_order("1"), GradOrder::kFirst);
  EXPECT_THROW(parse_mode("bogus"), std::invalid_argument);
}
