#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "umaml/finite_diff.hpp"
#include "umaml/harness/gradcheck.hpp"
#include "umaml/meta_engine.hpp"
#include "umaml/rng.hpp"
#include "umaml/uncertainty.hpp"
#include "umaml/weight_gen.hpp"

using namespace umaml;

namespace {

std::vector<double> weights(std::vector<double> s, std::vector<double> q, double tau = 1.0) {
  return compute_weights(s, q, WeightConfig{tau, 0.0, false});
}

double sum(const std::vector<double>& xs) {
  double t = 0.0;
  for (double x : xs) t += x;
  return t;
}

}  // namespace

TEST(WeightGen, SingleTaskGetsOne) {
  EXPECT_EQ(weights({0.3}, {7.0}), std::vector<double>{1.0});
  EXPECT_EQ(weights({3.0}, {0.1}), std::vector<double>{1.0});
  EXPECT_EQ(weights({0.3}, {0.1}), std::vector<double>{1.0});
}

TEST(WeightGen, GapProportions) {
  const auto w = weights({0.1, 0.2}, {0.3, 0.6});
  EXPECT_NEAR(w[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-15);
}

TEST(WeightGen, ThresholdBranch) {
  const auto w = weights({2.0, 0.1}, {2.5, 0.3});
  EXPECT_NEAR(w[0], 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(w[1], 1.0 / 6.0, 1e-15);
}

TEST(WeightGen, AllZeroFallsBackToUniform) {
  EXPECT_EQ(weights({0.5, 0.5}, {0.4, 0.4}), (std::vector<double>{0.5, 0.5}));
}

TEST(WeightGen, FloorAndSignedSwitch) {
  const std::vector<double> s{0.5, 0.1}, q{0.4, 0.4};
  const auto floored = compute_weights(s, q, WeightConfig{1.0, 0.1, false});
  EXPECT_NEAR(floored[0], 0.1 / 0.4, 1e-15);
  const auto signed_w = compute_weights(s, q, WeightConfig{1.0, 0.0, true});
  EXPECT_NEAR(signed_w[0], -0.1 / 0.2, 1e-15);
  EXPECT_NEAR(signed_w[1], 0.3 / 0.2, 1e-15);
}

TEST(WeightGen, Errors) {
  EXPECT_THROW(weights({0.1}, {0.1, 0.2}), std::invalid_argument);
  EXPECT_THROW(weights({std::nan("")}, {0.1}), std::invalid_argument);
  EXPECT_THROW(weights({}, {}), std::invalid_argument);
  EXPECT_THROW((WeightConfig{0.0, 0.0, false}.validate()), std::invalid_argument);
  EXPECT_THROW((WeightConfig{1.0, -1.0, false}.validate()), std::invalid_argument);
}

TEST(WeightGen, SimplexOverRandomInputs) {
  CounterRng rng(7, 900);
  std::uniform_real_distribution<double> loss(0.0, 3.0);
  std::uniform_int_distribution<int> size(1, 8);
  for (int trial = 0; trial < 20000; ++trial) {
    const int n = size(rng);
    std::vector<double> s(n), q(n);
    for (int i = 0; i < n; ++i) s[i] = loss(rng), q[i] = loss(rng);
    const auto w = weights(s, q);
    for (double x : w) EXPECT_GE(x, 0.0);
    EXPECT_NEAR(sum(w), 1.0, 1e-12);
  }
}

TEST(WeightGen, MonotoneInGap) {
  const auto w = weights({0.1, 0.1, 0.2}, {0.5, 0.3, 0.3});
  EXPECT_GT(w[0], w[1]);
  EXPECT_GT(w[1], w[2]);
}

TEST(WeightGen, ScaleInvariantAmongFittedTasks) {
  const std::vector<double> s{0.1, 0.2, 0.3};
  const std::vector<double> gaps{0.05, 0.2, 0.12};
  for (double c : {0.5, 2.0, 3.7}) {
    std::vector<double> q1(3), q2(3);
    for (int i = 0; i < 3; ++i) q1[i] = s[i] + gaps[i], q2[i] = s[i] + c * gaps[i];
    const auto a = weights(s, q1, 10.0), b = weights(s, q2, 10.0);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(WeightGen, MetaGradientTreatsWeightsAsConstants) {
  const MlpSpec spec{{1, 8, 1}, Activation::kTanh};
  const ParamVector theta = init_params(spec, 3);
  SinusoidSource src(5, 5, 3, Split::kTrain);
  std::vector<Episode> eps;
  for (int i = 0; i < 3; ++i) eps.push_back(src.next());

  MetaConfig cfg;
  cfg.meta_batch = 3;
  cfg.inner_lr = 0.05;
  cfg.mode = CombineMode::kWeightGen;
  cfg.threshold = 3.0;
  const MetaGradient mg = meta_gradient(spec, theta, eps, cfg);

  // Oracle: per-task gradients combined with weights from the detached losses.
  MetaConfig single = cfg;
  single.mode = CombineMode::kUniform;
  single.meta_batch = 1;
  std::vector<double> s, q;
  std::vector<ParamVector> per_task;
  for (const Episode& ep : eps) {
    const MetaGradient one = meta_gradient(spec, theta, std::span(&ep, 1), single);
    s.push_back(one.outcomes[0].support_loss);
    q.push_back(one.outcomes[0].query_loss);
    per_task.push_back(one.grad);
  }
  const auto w = compute_weights(s, q, cfg.weight_config());
  ParamVector expected = theta.zeros_like();
  for (std::size_t t = 0; t < eps.size(); ++t) expected = expected.axpy(w[t], per_task[t]);
  EXPECT_LE(max_relative_error(mg.grad, expected, 1e-12), 1e-10);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_DOUBLE_EQ(mg.weights[t], w[t]);
}

TEST(ScaledSoftmax, Examples) {
  for (double s2 : {0.1, 1.0, 50.0}) {
    const Tensor p = scaled_softmax(Tensor::matrix(1, 2, {1, 1}), s2);
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
  }
  const Tensor p = scaled_softmax(Tensor::matrix(1, 2, {0, std::log(3.0)}), 1.0);
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);
  const Tensor flat = scaled_softmax(Tensor::matrix(1, 2, {0, std::log(3.0)}), 1e6);
  EXPECT_NEAR(flat[0], 0.5, 1e-5);
  EXPECT_NEAR(flat[1], 0.5, 1e-5);
}

TEST(ScaledSoftmax, RejectsNonPositiveTemperature) {
  EXPECT_THROW(scaled_softmax(Tensor::matrix(1, 2, {0, 1}), 0.0), std::invalid_argument);
  EXPECT_THROW(scaled_softmax(Tensor::matrix(1, 2, {0, 1}), -1.0), std::invalid_argument);
}

TEST(ScaledSoftmax, RowsSumToOneAndArgmaxInvariant) {
  CounterRng rng(5, 901);
  std::uniform_real_distribution<double> d(-4, 4);
  Tensor logits({6, 5});
  for (double& v : logits.values()) v = d(rng);
  const Tensor base = scaled_softmax(logits, 1.0);
  for (double s2 : {0.05, 0.7, 3.0, 40.0}) {
    const Tensor p = scaled_softmax(logits, s2);
    for (std::size_t r = 0; r < 6; ++r) {
      double total = 0.0;
      std::size_t am = 0, am_base = 0;
      for (std::size_t c = 0; c < 5; ++c) {
        total += p.at(r, c);
        if (p.at(r, c) > p.at(r, am)) am = c;
        if (base.at(r, c) > base.at(r, am_base)) am_base = c;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
      EXPECT_EQ(am, am_base);
    }
  }
}

TEST(ScaledSoftmax, GraphVersionMatchesValueVersion) {
  Graph g;
  const Tensor logits = Tensor::matrix(2, 3, {0.1, 2, -1, 3, 0, 0.5});
  const Var v = scaled_softmax(g.leaf(logits), 2.5);
  const Tensor expected = scaled_softmax(logits, 2.5);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(v.value()[i], expected[i], 1e-15);
}

TEST(ScaledNll, UnitTemperatureIsCrossEntropy) {
  const Tensor logits = Tensor::matrix(2, 2, {0, std::log(3.0), 1, 1});
  const Tensor labels = Tensor::matrix(2, 1, {1, 0});
  EXPECT_NEAR(scaled_nll(logits, labels, 1.0), (-std::log(0.75) - std::log(0.5)) / 2, 1e-15);
}

TEST(CombinedLoss, UnitSigmaIsPlainSum) {
  const std::vector<double> l{2.0, 4.0}, s{0.0, 0.0};
  EXPECT_EQ(combined_loss(l, s, TaskKind::kClassification), 6.0);
  CounterRng rng(2, 902);
  std::uniform_real_distribution<double> d(0.0, 10.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> ls(4);
    double plain = 0.0;
    for (double& x : ls) plain += (x = d(rng));
    EXPECT_NEAR(combined_loss(ls, std::vector<double>(4, 0.0), TaskKind::kClassification), plain,
                4 * std::numeric_limits<double>::epsilon() * plain);
  }
}

TEST(CombinedLoss, Examples) {
  const std::vector<double> one{1.0};
  const std::vector<double> s{std::log(4.0)};
  EXPECT_NEAR(combined_loss(one, s, TaskKind::kClassification), 0.25 + std::log(4.0) / 2, 1e-15);
  EXPECT_NEAR(combined_loss(one, std::vector<double>{0.0}, TaskKind::kRegression), 0.5, 1e-15);
}

TEST(CombinedLoss, Errors) {
  const std::vector<double> l{1.0, 2.0}, s{0.0};
  EXPECT_THROW(combined_loss(l, s, TaskKind::kClassification), std::invalid_argument);
  const std::vector<double> bad{std::nan("")}, s1{0.0};
  EXPECT_ANY_THROW(combined_loss(bad, s1, TaskKind::kClassification));
}

TEST(CombinedLoss, GraphAndValueVersionsAgree) {
  Graph g;
  std::vector<Var> l{g.leaf(Tensor::scalar(0.7)), g.leaf(Tensor::scalar(2.2))};
  std::vector<Var> s{g.leaf(Tensor::scalar(-0.3)), g.leaf(Tensor::scalar(1.1))};
  for (TaskKind k : {TaskKind::kClassification, TaskKind::kRegression}) {
    EXPECT_NEAR(combined_loss(l, s, k).value().item(),
                combined_loss(std::vector<double>{0.7, 2.2}, std::vector<double>{-0.3, 1.1}, k),
                1e-15);
  }
}

TEST(CombinedLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {0u, 1u, 2u}) EXPECT_LE(verify::check_uncertainty_grad(seed), 1e-6);
}

TEST(OptimalS, Examples) {
  EXPECT_NEAR(optimal_s(0.5, TaskKind::kClassification), 0.0, 1e-15);
  EXPECT_NEAR(optimal_s(1.0, TaskKind::kRegression), 0.0, 1e-15);
  EXPECT_NEAR(optimal_s(2.0, TaskKind::kClassification), std::log(4.0), 1e-15);
  EXPECT_NEAR(std::exp(-optimal_s(2.0, TaskKind::kClassification)), 0.25, 1e-15);
  EXPECT_THROW(optimal_s(0.0, TaskKind::kRegression), std::invalid_argument);
}

TEST(OptimalS, DescentOnSAloneConverges) {
  for (TaskKind kind : {TaskKind::kClassification, TaskKind::kRegression}) {
    for (double loss : {0.05, 0.5, 1.0, 2.0, 7.5}) {
      double s = 0.0;
      for (int it = 0; it < 5000; ++it) {
        Graph g;
        const Var sv = g.leaf(Tensor::scalar(s));
        const Var l = g.constant(Tensor::scalar(loss));
        const Var obj = combined_loss(std::span(&l, 1), std::span(&sv, 1), kind);
        s -= 1.0 * g.backward(obj, std::span(&sv, 1))[0].value().item();
      }
      EXPECT_NEAR(s, optimal_s(loss, kind), 1e-6) << loss;
    }
  }
}

TEST(UncertaintyState, WeightDecreasesInS) {
  UncertaintyState u(3);
  u.s = {-1.0, 0.0, 2.0};
  EXPECT_DOUBLE_EQ(u.weight(1), 1.0);
  EXPECT_GT(u.weight(0), u.weight(1));
  EXPECT_GT(u.weight(1), u.weight(2));
}
