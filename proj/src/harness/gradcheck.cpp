#include "umaml/harness/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "umaml/finite_diff.hpp"
#include "umaml/harness/random_graph.hpp"
#include "umaml/harness/reference.hpp"
#include "umaml/rng.hpp"

namespace umaml::verify {

namespace {

constexpr double kStep = 1e-5;

double rel(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kRelFloor});
}

ParamVector grad_values(const ParamVector& layout, std::span<const Var> grads) {
  return collect(layout, grads);
}

}  // namespace

double check_random_graphs(std::uint64_t seed, int count) {
  double worst = 0.0;
  int accepted = 0;
  for (std::uint64_t attempt = 0; accepted < count; ++attempt) {
    const std::uint64_t structure = seed * 1000003ull + attempt;
    const ParamVector inputs = random_graph_inputs(structure);
    Graph g;
    const auto leaves = add_leaves(g, inputs);
    const RandomExpr e = build_random_expr(g, leaves, structure);
    // FD across a relu kink is meaningless.
    if (relu_margin(e) < 1e-3) continue;
    ++accepted;
    const ParamVector analytic = grad_values(inputs, g.backward(e.output, leaves));
    const ParamVector numeric = finite_diff_grad(
        [&](const ParamVector& p) {
          Graph h;
          const auto l = add_leaves(h, p);
          return build_random_expr(h, l, structure).output.value().item();
        },
        inputs, kStep);
    worst = std::max(worst, max_relative_error(analytic, numeric, kRelFloor));
  }
  return worst;
}

double check_polynomial_second_derivatives(std::uint64_t seed, int count) {
  CounterRng rng(seed, 303);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  double worst = 0.0;
  for (int t = 0; t < count; ++t) {
    const int degree = t % 5;
    std::vector<double> c(degree + 1);
    for (double& v : c) v = dist(rng);
    const double x0 = dist(rng);

    Graph g;
    const Var x = g.leaf(Tensor::scalar(x0));
    // Horner form.
    Var p = g.constant(Tensor::scalar(c[degree]));
    for (int k = degree - 1; k >= 0; --k) p = g.add_scalar(g.mul(p, x), c[k]);
    const Var d1 = g.backward(p, std::span(&x, 1))[0];
    const Var d2 = g.backward(d1, std::span(&x, 1))[0];

    double expected = 0.0;
    for (int k = 2; k <= degree; ++k) expected += k * (k - 1) * c[k] * std::pow(x0, k - 2);
    worst = std::max(worst, rel(d2.value().item(), expected));
  }
  return worst;
}

double check_backward_linearity(std::uint64_t seed) {
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const std::uint64_t s1 = seed * 7919 + 2 * t, s2 = s1 + 1;
    const ParamVector inputs = random_graph_inputs(s1);
    const double a = 0.7 + t * 0.1, b = -1.3 + t * 0.05;
    Graph g;
    const auto leaves = add_leaves(g, inputs);
    const Var f = build_random_expr(g, leaves, s1, 4).output;
    const Var h = build_random_expr(g, leaves, s2, 4).output;
    const auto gf = grad_values(inputs, g.backward(f, leaves));
    const auto gh = grad_values(inputs, g.backward(h, leaves));
    const auto gc = grad_values(inputs, g.backward(g.add(g.scale(f, a), g.scale(h, b)), leaves));
    const ParamVector combined = gf.zeros_like().axpy(a, gf).axpy(b, gh);
    for (std::size_t i = 0; i < gc.numel(); ++i) {
      worst = std::max(worst, std::abs(gc.coord(i) - combined.coord(i)) /
                                  std::max(1.0, std::abs(combined.coord(i))));
    }
  }
  return worst;
}

namespace {

Episode probe_episode(std::uint64_t seed, std::size_t shot, std::size_t query) {
  SinusoidSource src(shot, query, seed, Split::kTrain);
  return src.next();
}

}  // namespace

double check_mlp_grad_fd(std::uint64_t seed) {
  double worst = 0.0;
  const MlpSpec specs[] = {{{1, 6, 1}, Activation::kTanh}, {{3, 5, 4}, Activation::kTanh},
                           {{2, 4, 3, 2}, Activation::kRelu}};
  for (std::size_t k = 0; k < std::size(specs); ++k) {
    const MlpSpec& spec = specs[k];
    const ParamVector theta = init_params(spec, seed + k);
    CounterRng rng(seed + k, 404);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    Tensor x({5, spec.input_dim()});
    for (double& v : x.values()) v = dist(rng);
    Tensor y({5, 1});
    const LossKind kind = spec.output_dim() == 1 ? LossKind::kMse : LossKind::kCrossEntropy;
    for (std::size_t r = 0; r < 5; ++r) {
      y[r] = kind == LossKind::kMse ? dist(rng) : static_cast<double>(r % spec.output_dim());
    }
    Graph g;
    const auto vars = add_leaves(g, theta);
    const Var l = task_loss(forward(spec, vars, g.constant(x)), y, kind);
    const ParamVector analytic = collect(theta, g.backward(l, vars));
    const ParamVector numeric = finite_diff_grad(
        [&](const ParamVector& p) { return evaluate_loss(spec, p, x, y, kind).loss; }, theta,
        kStep);
    worst = std::max(worst, max_relative_error(analytic, numeric, kRelFloor));
  }
  return worst;
}

double check_mlp_grad_reference(std::uint64_t seed) {
  double worst = 0.0;
  const MlpSpec spec{{1, 40, 40, 1}, Activation::kRelu};
  const ParamVector theta = init_params(spec, seed);
  const Episode ep = probe_episode(seed, 10, 10);
  Graph g;
  const auto vars = add_leaves(g, theta);
  const Var l = task_loss(forward(spec, vars, g.constant(ep.support_x)), ep.support_y,
                          LossKind::kMse);
  const ParamVector analytic = collect(theta, g.backward(l, vars));
  const ParamVector ref =
      reference::grad(spec, theta, ep.support_x, ep.support_y, LossKind::kMse);
  worst = std::max(worst, max_relative_error(analytic, ref, kRelFloor));
  return worst;
}

double check_meta_gradient_fd(std::uint64_t seed, GradOrder order) {
  const MlpSpec spec{{1, 8, 1}, Activation::kRelu};
  const ParamVector theta = init_params(spec, seed);
  const Episode ep = probe_episode(seed, 10, 10);
  MetaConfig cfg;
  cfg.meta_batch = 1;
  cfg.inner_lr = 0.1;
  cfg.inner_steps = 1;
  cfg.order = order;
  cfg.mode = CombineMode::kUniform;
  cfg.loss_kind = LossKind::kMse;
  const MetaGradient mg = meta_gradient(spec, theta, std::span(&ep, 1), cfg);
  const ParamVector numeric = finite_diff_grad(
      [&](const ParamVector& p) {
        return reference::maml_objective(spec, p, std::span(&ep, 1), cfg.inner_lr, 1,
                                         LossKind::kMse);
      },
      theta, kStep);
  return max_relative_error(mg.grad, numeric, kRelFloor);
}

double check_linear_probe_orders(std::uint64_t seed) {
  CounterRng rng(seed, 505);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor coef({4}), start({4});
  for (double& v : coef.values()) v = dist(rng);
  for (double& v : start.values()) v = dist(rng);

  auto meta_grad = [&](GradOrder order) {
    Graph g;
    const Var theta = g.leaf(start);
    const Var a = g.constant(coef);
    const LossFn inner = [&](std::span<const Var> p) { return g.sum(g.mul(a, p[0])); };
    const auto adapted = inner_adapt(std::span(&theta, 1), inner, 0.3, 2, order);
    const Var t = g.tanh(adapted.params[0]);
    const Var outer = g.sum(g.mul(t, t));
    return g.backward(outer, std::span(&theta, 1))[0].value();
  };
  const Tensor first = meta_grad(GradOrder::kFirst);
  const Tensor second = meta_grad(GradOrder::kSecond);
  double worst = 0.0;
  for (std::size_t i = 0; i < first.size(); ++i) worst = std::max(worst, rel(first[i], second[i]));
  return worst;
}

double check_curved_probe(GradOrder order) {
  const double theta0 = 1.5, lr = 0.1;
  Graph g;
  const Var theta = g.leaf(Tensor::scalar(theta0));
  const LossFn inner = [&](std::span<const Var> p) { return g.mul(p[0], p[0]); };
  const auto adapted = inner_adapt(std::span(&theta, 1), inner, lr, 1, order);
  const Var d = g.add_scalar(adapted.params[0], -1.0);
  const Var outer = g.mul(d, d);
  const double got = g.backward(outer, std::span(&theta, 1))[0].value().item();
  // theta' = theta (1 - 2 lr); d/dtheta (theta' - 1)^2 = 2 (theta' - 1)(1 - 2 lr)
  const double adapted0 = theta0 * (1.0 - 2.0 * lr);
  const double expected = 2.0 * (adapted0 - 1.0) * (1.0 - 2.0 * lr);
  return rel(got, expected);
}

double check_uncertainty_grad(std::uint64_t seed) {
  CounterRng rng(seed, 606);
  std::uniform_real_distribution<double> loss_dist(0.1, 3.0), s_dist(-1.5, 1.5);
  double worst = 0.0;
  for (TaskKind kind : {TaskKind::kClassification, TaskKind::kRegression}) {
    std::vector<ParamEntry> entries;
    for (int i = 0; i < 4; ++i) {
      entries.push_back({"L" + std::to_string(i), Tensor::scalar(loss_dist(rng))});
    }
    for (int i = 0; i < 4; ++i) {
      entries.push_back({"s" + std::to_string(i), Tensor::scalar(s_dist(rng))});
    }
    const ParamVector point(entries);
    Graph g;
    const auto vars = add_leaves(g, point);
    const auto span = std::span<const Var>(vars);
    const Var total = combined_loss(span.first(4), span.subspan(4), kind);
    const ParamVector analytic = collect(point, g.backward(total, vars));
    const ParamVector numeric = finite_diff_grad(
        [&](const ParamVector& p) {
          const auto flat = p.flatten();
          return combined_loss(std::span(flat).first(4), std::span(flat).subspan(4), kind);
        },
        point, kStep);
    worst = std::max(worst, max_relative_error(analytic, numeric, kRelFloor));
  }
  return worst;
}

std::vector<CheckResult> run_gradcheck(const GradcheckOptions& options) {
  const std::uint64_t seed = options.seed;
  const GradOrder meta_order =
      options.force_first_order ? GradOrder::kFirst : GradOrder::kSecond;
  std::vector<CheckResult> out;
  auto add = [&](std::string name, double err, double tol) {
    out.push_back({std::move(name), err, tol, err <= tol});
  };
  add("autodiff_random_graphs", check_random_graphs(seed, options.random_graphs), 1e-5);
  add("second_derivative_polynomials", check_polynomial_second_derivatives(seed, 50), 1e-8);
  add("backward_linearity", check_backward_linearity(seed), 1e-12);
  add("mlp_grad_vs_finite_diff", check_mlp_grad_fd(seed), 1e-5);
  add("mlp_grad_vs_reference", check_mlp_grad_reference(seed), 1e-10);
  add("meta_gradient_vs_finite_diff", check_meta_gradient_fd(seed, meta_order), 1e-4);
  add("first_second_order_linear_probe", check_linear_probe_orders(seed), 1e-10);
  add("meta_gradient_curved_probe", check_curved_probe(meta_order), 1e-10);
  add("uncertainty_grad_vs_finite_diff", check_uncertainty_grad(seed), 1e-6);
  return out;
}

std::string format_report(const std::vector<CheckResult>& results) {
  std::string report;
  char line[256];
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-34s worst_rel_err=%.6e tol=%.0e %s\n", r.name.c_str(),
                  r.worst_error, r.tolerance, r.passed ? "PASS" : "FAIL");
    report += line;
  }
  std::snprintf(line, sizeof line, "overall %s\n", all_passed(results) ? "PASS" : "FAIL");
  return report + line;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

}  // namespace umaml::verify
