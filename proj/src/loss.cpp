#include "umaml/loss.hpp"

#include <stdexcept>

namespace umaml {

Var task_loss(Var output, const Tensor& targets, LossKind kind) {
  Graph& g = *output.graph;
  if (kind == LossKind::kMse) return g.mse(output, g.constant(targets));
  const std::size_t classes = output.shape().back();
  return g.cross_entropy(output, g.constant(one_hot(targets, classes)));
}

double argmax_accuracy(const Tensor& logits, const Tensor& labels) {
  if (labels.size() != logits.rows()) {
    throw std::invalid_argument("one label per logit row required");
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    }
    if (static_cast<double>(best) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

LossValue evaluate_loss(const MlpSpec& spec, const ParamVector& params,
                        const Tensor& x, const Tensor& y, LossKind kind) {
  spec.check_params(params);
  Graph g;
  const auto vars = add_leaves(g, params);
  const Var out = forward(spec, vars, g.constant(x));
  LossValue r;
  r.loss = task_loss(out, y, kind).value().item();
  if (kind == LossKind::kCrossEntropy) r.accuracy = argmax_accuracy(out.value(), y);
  return r;
}

}  // namespace umaml
