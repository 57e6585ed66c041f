#include "umaml/meta_engine.hpp"

#include <chrono>
#include <cmath>

namespace umaml {

std::string to_string(CombineMode m) {
  switch (m) {
    case CombineMode::kUniform: return "maml";
    case CombineMode::kWeightGen: return "weightgen";
    case CombineMode::kUncertainty: return "uncertainty";
  }
  return "?";
}

CombineMode parse_mode(std::string_view s) {
  if (s == "maml" || s == "uniform") return CombineMode::kUniform;
  if (s == "weightgen") return CombineMode::kWeightGen;
  if (s == "uncertainty") return CombineMode::kUncertainty;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

std::string to_string(GradOrder o) { return o == GradOrder::kFirst ? "1" : "2"; }

GradOrder parse_order(std::string_view s) {
  if (s == "1" || s == "first") return GradOrder::kFirst;
  if (s == "2" || s == "second") return GradOrder::kSecond;
  throw std::invalid_argument("unknown gradient order '" + std::string(s) + "'");
}

void MetaConfig::validate() const {
  if (!(inner_lr > 0.0) || !(outer_lr > 0.0)) {
    throw std::invalid_argument("inner and outer learning rates must be > 0");
  }
  if (inner_steps < 1) throw std::invalid_argument("inner_steps must be >= 1");
  if (meta_batch < 1) throw std::invalid_argument("meta_batch must be >= 1");
  if (pool_capacity < 1) throw std::invalid_argument("pool_capacity must be >= 1");
  if (selection_stride < 1) throw std::invalid_argument("selection_stride must be >= 1");
  weight_config().validate();
}

WeightConfig MetaConfig::weight_config() const {
  return {threshold, weight_floor, signed_weights};
}

TaskKind MetaConfig::task_kind() const {
  return loss_kind == LossKind::kMse ? TaskKind::kRegression : TaskKind::kClassification;
}

AdaptResult inner_adapt(std::span<const Var> params, const LossFn& loss, double lr,
                        std::size_t steps, GradOrder order) {
  if (steps < 1) throw std::invalid_argument("inner_adapt needs at least one step");
  if (params.empty()) throw std::invalid_argument("inner_adapt needs parameters");
  Graph& g = *params.front().graph;
  AdaptResult result;
  std::vector<Var> current(params.begin(), params.end());
  for (std::size_t k = 0; k < steps; ++k) {
    try {
      const Var l = loss(current);
      const double value = l.value().item();
      if (!std::isfinite(value)) throw std::domain_error("loss is not finite");
      if (k == 0) result.initial_loss = value;
      const auto grads = g.backward(l, current);
      for (std::size_t i = 0; i < current.size(); ++i) {
        const Var gi = order == GradOrder::kSecond ? grads[i] : g.detach(grads[i]);
        current[i] = g.sub(current[i], g.scale(gi, lr));
      }
    } catch (const std::domain_error& e) {
      throw NonFiniteLoss("inner step " + std::to_string(k) + ": " + e.what());
    }
  }
  result.params = std::move(current);
  return result;
}

ParamVector adapt_params(const MlpSpec& spec, const ParamVector& params, const Tensor& x,
                         const Tensor& y, LossKind kind, double lr, std::size_t steps) {
  spec.check_params(params);
  ParamVector current = params;
  for (std::size_t k = 0; k < steps; ++k) {
    Graph g;
    const auto vars = add_leaves(g, current);
    try {
      const Var l = task_loss(forward(spec, vars, g.constant(x)), y, kind);
      const auto grads = g.backward(l, vars);
      for (std::size_t i = 0; i < vars.size(); ++i) {
        auto dst = current[i].value.values();
        auto src = grads[i].value().values();
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] -= lr * src[j];
      }
    } catch (const std::domain_error& e) {
      throw NonFiniteLoss("adaptation step " + std::to_string(k) + ": " + e.what());
    }
  }
  return current;
}

LossValue evaluate_query(const MlpSpec& spec, const ParamVector& adapted,
                         const Episode& episode, LossKind kind) {
  try {
    return evaluate_loss(spec, adapted, episode.query_x, episode.query_y, kind);
  } catch (const std::domain_error& e) {
    throw NonFiniteLoss(std::string("query evaluation: ") + e.what());
  }
}

MetaGradient meta_gradient(const MlpSpec& spec, const ParamVector& theta,
                           std::span<const Episode> episodes, const MetaConfig& cfg,
                           const UncertaintyState* uncertainty) {
  cfg.validate();
  spec.check_params(theta);
  if (episodes.empty()) throw std::invalid_argument("meta_gradient needs episodes");
  const bool use_s = cfg.mode == CombineMode::kUncertainty;
  if (use_s && (!uncertainty || uncertainty->size() != episodes.size())) {
    throw std::invalid_argument("uncertainty mode needs one log-variance per task");
  }

  Graph g;
  const auto theta_vars = add_leaves(g, theta);
  MetaGradient mg;
  std::vector<Var> query_losses;
  for (std::size_t t = 0; t < episodes.size(); ++t) {
    const Episode& ep = episodes[t];
    const Var xs = g.constant(ep.support_x);
    const LossFn support_loss = [&](std::span<const Var> p) {
      return task_loss(forward(spec, p, xs), ep.support_y, cfg.loss_kind);
    };
    const AdaptResult adapted =
        inner_adapt(theta_vars, support_loss, cfg.inner_lr, cfg.inner_steps, cfg.order);

    Var out, ql;
    try {
      out = forward(spec, adapted.params, g.constant(ep.query_x));
      ql = task_loss(out, ep.query_y, cfg.loss_kind);
    } catch (const std::domain_error& e) {
      throw NonFiniteLoss("query loss of task " + std::to_string(t) + ": " + e.what());
    }
    TaskOutcome outcome;
    outcome.support_loss = adapted.initial_loss;
    outcome.query_loss = ql.value().item();
    outcome.adapted_params = collect(theta, adapted.params);
    if (cfg.loss_kind == LossKind::kCrossEntropy) {
      outcome.query_accuracy = argmax_accuracy(out.value(), ep.query_y);
    }
    mg.outcomes.push_back(std::move(outcome));
    query_losses.push_back(ql);
  }

  const std::size_t n = episodes.size();
  std::vector<Var> s_vars;
  Var objective;
  switch (cfg.mode) {
    case CombineMode::kUniform: {
      mg.weights.assign(n, 1.0 / static_cast<double>(n));
      break;
    }
    case CombineMode::kWeightGen: {
      std::vector<double> support(n), query(n);
      for (std::size_t t = 0; t < n; ++t) {
        support[t] = mg.outcomes[t].support_loss;
        query[t] = mg.outcomes[t].query_loss;
      }
      mg.weights = compute_weights(support, query, cfg.weight_config());
      break;
    }
    case CombineMode::kUncertainty: {
      for (double s : uncertainty->s) s_vars.push_back(g.leaf(Tensor::scalar(s)));
      for (std::size_t t = 0; t < n; ++t) mg.weights.push_back(uncertainty->weight(t));
      objective = combined_loss(query_losses, s_vars, cfg.task_kind());
      break;
    }
  }
  if (cfg.mode != CombineMode::kUncertainty) {
    // Weights enter as constants.
    objective = g.scale(query_losses[0], mg.weights[0]);
    for (std::size_t t = 1; t < n; ++t) {
      objective = g.add(objective, g.scale(query_losses[t], mg.weights[t]));
    }
  }
  mg.objective = objective.value().item();

  std::vector<Var> wrt = theta_vars;
  wrt.insert(wrt.end(), s_vars.begin(), s_vars.end());
  const auto grads = g.backward(objective, wrt);
  mg.grad = collect(theta, std::span(grads).first(theta_vars.size()));
  for (std::size_t i = theta_vars.size(); i < grads.size(); ++i) {
    mg.s_grad.push_back(grads[i].value().item());
  }
  return mg;
}

MetaStepResult meta_step(const MlpSpec& spec, const ParamVector& theta,
                         std::span<const Episode> episodes, const MetaConfig& cfg,
                         UncertaintyState* uncertainty, Adam& optimizer) {
  if (episodes.size() != cfg.meta_batch) {
    throw std::invalid_argument("meta_step expects " + std::to_string(cfg.meta_batch) +
                                " episodes, got " + std::to_string(episodes.size()));
  }
  MetaGradient mg = meta_gradient(spec, theta, episodes, cfg, uncertainty);

  const bool use_s = cfg.mode == CombineMode::kUncertainty;
  std::vector<Tensor> params;
  std::vector<Tensor> grads;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    params.push_back(theta[i].value);
    grads.push_back(mg.grad[i].value);
  }
  if (use_s) {
    params.emplace_back(Shape{uncertainty->size()}, uncertainty->s);
    grads.emplace_back(Shape{mg.s_grad.size()}, mg.s_grad);
  }
  optimizer.step(params, grads);

  MetaStepResult r;
  r.params = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!params[i].all_finite()) throw NonFiniteLoss("meta-update produced non-finite parameters");
    r.params[i].value = std::move(params[i]);
  }
  if (use_s) {
    const auto& s = params.back().data();
    uncertainty->s.assign(s.begin(), s.end());
  }
  r.outcomes = std::move(mg.outcomes);
  r.weights = std::move(mg.weights);
  r.objective = mg.objective;
  return r;
}

EvalSummary evaluate_adaptation(const MlpSpec& spec, const ParamVector& theta,
                                std::span<const Episode> episodes, LossKind kind,
                                double lr, std::size_t steps) {
  EvalSummary s;
  if (episodes.empty()) return s;
  for (const Episode& ep : episodes) {
    const LossValue pre = evaluate_query(spec, theta, ep, kind);
    const ParamVector adapted =
        adapt_params(spec, theta, ep.support_x, ep.support_y, kind, lr, steps);
    const LossValue post = evaluate_query(spec, adapted, ep, kind);
    s.pre_losses.push_back(pre.loss);
    s.losses.push_back(post.loss);
    if (post.accuracy) s.accuracies.push_back(*post.accuracy);
  }
  const double n = static_cast<double>(episodes.size());
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    s.mean_loss += s.losses[i] / n;
    s.mean_pre_loss += s.pre_losses[i] / n;
  }
  if (!s.accuracies.empty()) {
    double acc = 0.0;
    for (double a : s.accuracies) acc += a / n;
    s.mean_accuracy = acc;
  }
  return s;
}

TrainResult meta_train(const MlpSpec& spec, const MetaConfig& cfg, TaskSource& tasks,
                       std::span<const Episode> eval_set, std::uint64_t seed,
                       const TrainOptions& options) {
  cfg.validate();
  spec.validate();
  if (cfg.iterations > 0 && eval_set.empty()) {
    throw std::invalid_argument("meta_train needs a non-empty evaluation set");
  }
  const std::size_t log_interval = std::max<std::size_t>(options.log_interval, 1);

  TrainResult result;
  result.params = init_params(spec, seed);
  result.uncertainty = UncertaintyState(cfg.meta_batch);
  result.pool = InitPool(cfg.use_pool ? cfg.pool_capacity : 1);
  result.pool.store(result.params, 0);
  Adam optimizer(AdamConfig{cfg.outer_lr});
  const bool use_s = cfg.mode == CombineMode::kUncertainty;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Episode> batch;
    batch.reserve(cfg.meta_batch);
    for (std::size_t t = 0; t < cfg.meta_batch; ++t) batch.push_back(tasks.next());

    InitPool& pool = result.pool;
    std::size_t idx = pool.size() - 1;
    if (cfg.use_pool && it % cfg.selection_stride == 0) {
      idx = pool.select_best(batch, spec, cfg.loss_kind).index;
    }
    if (idx != pool.size() - 1) optimizer.reset();
    if (cfg.fresh_uncertainty) result.uncertainty = UncertaintyState(cfg.meta_batch);

    MetaStepResult step;
    try {
      step = meta_step(spec, pool[idx].params, batch, cfg,
                       use_s ? &result.uncertainty : nullptr, optimizer);
    } catch (const NonFiniteLoss& e) {
      throw NonFiniteLoss("iteration " + std::to_string(it) + ": " + e.what());
    }
    result.params = step.params;
    pool.store(step.params, it + 1);

    if (it % log_interval != 0 && it + 1 != cfg.iterations) continue;
    MetricsRow row;
    row.iteration = it;
    for (const auto& o : step.outcomes) {
      row.mean_support_loss += o.support_loss / static_cast<double>(cfg.meta_batch);
      row.mean_query_loss += o.query_loss / static_cast<double>(cfg.meta_batch);
    }
    const EvalSummary eval = evaluate_adaptation(spec, result.params, eval_set, cfg.loss_kind,
                                                 cfg.inner_lr, options.eval_inner_steps);
    row.post_adapt_eval_loss = eval.mean_loss;
    row.accuracy = eval.mean_accuracy;
    row.init_idx = idx;
    if (cfg.mode == CombineMode::kWeightGen) row.weights = step.weights;
    if (use_s) row.s = result.uncertainty.s;
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    result.trace.push_back(row);
    if (options.on_row) options.on_row(row);
  }
  return result;
}

}  // namespace umaml
